"""Colonoscopy-report mining and time-to-event modeling of polyp recurrence."""

__version__ = "0.1.0"
