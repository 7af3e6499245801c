class FairSmoteError(Exception):
    pass


class ConfigError(FairSmoteError):
    """Invalid configuration: unknown columns, bad mappings, bad rules."""


class DataError(FairSmoteError):
    """The data itself cannot satisfy an operation's preconditions."""


class PipelineError(FairSmoteError):
    def __init__(self, pipeline, repeat, fold, cause):
        self.pipeline = pipeline
        self.repeat = repeat
        self.fold = fold
        self.cause = cause
        super().__init__(f"pipeline {pipeline!r} failed at repeat {repeat}, fold {fold}: {cause}")


class TrainingError(FairSmoteError):
    """Model fitting failed, e.g. a diverging learning rate."""
