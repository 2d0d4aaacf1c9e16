"""Exception hierarchy shared by all modules."""


class UagaError(Exception):
    """Base class for every error raised by this package."""


class GraphError(UagaError):
    pass


class EdgeListParseError(GraphError):
    def __init__(self, path, lineno, line, reason):
        self.path = str(path)
        self.lineno = lineno
        self.line = line
        super().__init__(f"{path}:{lineno}: {reason}: {line!r}")


class EmbeddingError(UagaError):
    pass


class AlignmentError(UagaError):
    pass


class CentralityError(UagaError):
    pass


class EvaluationError(UagaError):
    pass


class RankDeficientWarning(UserWarning):
    """Procrustes was solved with fewer anchor pairs than dimensions."""


class NoAnchorsWarning(UserWarning):
    """Refinement found no pseudo anchors and kept the input mapping."""
