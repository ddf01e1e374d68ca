class FormatError(ValueError):
    """Raised when a file on disk is not in the expected format."""


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes NaN or infinite."""

    def __init__(self, epoch, loss, message=None):
        self.epoch = epoch
        self.loss = loss
        super().__init__(message or f"non-finite loss {loss!r} at epoch {epoch}")
