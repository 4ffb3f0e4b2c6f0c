"""Exception types raised across the analysis pipeline."""


class PolyrecurError(Exception):
    """Base class for all package-specific errors."""


class NoEventsError(PolyrecurError):
    """A model was asked to fit data containing no observed events."""


class SingularHessianError(PolyrecurError):
    """The Cox information matrix is singular (collinear covariates)."""


class MissingCovariateError(PolyrecurError):
    """A prediction row lacks a covariate the fitted model requires."""


class NoOobTreesError(PolyrecurError):
    """A case was in-bag for every tree, so no OOB prediction exists."""


class NoUsablePairsError(PolyrecurError):
    """Concordance is undefined: no pair of cases can be ordered."""


class DegenerateLabelsError(PolyrecurError):
    """ROC is undefined: all cases fall in one class at the horizon."""


class UnrenderableSummaryError(PolyrecurError):
    """A visit summary cannot be expressed exactly in report text."""
