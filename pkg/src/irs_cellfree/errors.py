class SolverFailure(RuntimeError):
    """An iterative solver diverged or produced non-finite values.

    ``context`` carries machine-readable details (solver name, iteration, ...).
    """

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context
