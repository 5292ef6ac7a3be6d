class PFRNetError(Exception):
    """Base class for errors raised by the PFRNet library."""


class ShapeError(PFRNetError, ValueError):
    """A tensor does not satisfy a module's shape precondition."""


class ConfigError(PFRNetError, ValueError):
    """Invalid training or harness configuration."""


class DatasetError(PFRNetError):
    """A dataset directory is missing, empty or inconsistent."""


class CheckpointError(PFRNetError):
    """A checkpoint file is missing or unreadable."""


class LossInputError(PFRNetError, ValueError):
    """Loss targets are not binary or do not match the logits."""


class TrainingDiverged(PFRNetError):
    """The training loss became NaN or infinite."""

    def __init__(self, step, terms):
        self.step = step
        self.terms = terms
        detail = ', '.join(f'{name}={value:.6g}' for name, value in terms.items())
        super().__init__(f'Non-finite loss at step {step} ({detail})')
