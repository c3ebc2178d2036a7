"""Dataset store, HTTP service, and CLI."""

from .store import AggregateResult, Store, SubmissionRecord

__all__ = ["AggregateResult", "Store", "SubmissionRecord"]
