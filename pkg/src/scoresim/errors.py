"""Exception hierarchy shared across the package."""


class ScoresimError(Exception):
    """Base class for all errors raised by scoresim."""


class ScenarioError(ScoresimError, ValueError):
    """A scenario or shift file is malformed or refers to unknown attributes."""


class InfeasibleSpecification(ScoresimError, ValueError):
    """Bad ratios push a level's conditional default probability to 1 or above."""


class UnbucketableValue(ScoresimError, ValueError):
    """A raw attribute value falls outside every level range."""


class FitError(ScoresimError, RuntimeError):
    """Logistic regression could not be fitted."""


class RankDeficientError(FitError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; collinear columns: {', '.join(self.columns)}")


class SeparationError(FitError):
    def __init__(self, message="separation: coefficients diverging (|beta| > 30)"):
        super().__init__(message)


class ReplicationError(ScoresimError, RuntimeError):
    """A replication failed; carries the failing replication index."""

    def __init__(self, replication, cause):
        self.replication = replication
        self.cause = cause
        super().__init__(f"replication {replication} failed: {cause}")
