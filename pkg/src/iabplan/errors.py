"""Exception hierarchy for the iabplan package."""


class IabPlanError(Exception):
    """Base class for all iabplan errors."""


class ParameterError(IabPlanError, ValueError):
    """An argument is out of range or refers to an unknown entity."""


class ScenarioFormatError(IabPlanError, ValueError):
    """A scenario file or graph violates the schema; the message names the field."""


class ConfigurationError(IabPlanError):
    """Mutually inconsistent options, e.g. flow constraints without demands."""


class McsTableError(IabPlanError, ValueError):
    """A link-adaptation table is malformed."""


class MpsFormatError(IabPlanError, ValueError):
    """An MPS file could not be parsed."""


class ExternalSolverError(IabPlanError):
    """Base class for failures when delegating to an external solver."""


class SolverCommandError(ExternalSolverError):
    """The external solver command exited with a nonzero status."""

    def __init__(self, command, returncode, stderr=""):
        self.command = command
        self.returncode = returncode
        self.stderr = stderr
        super().__init__(f"solver command failed with exit code {returncode}: {command}")


class SolutionParseError(ExternalSolverError):
    """The solution file produced by an external solver is unreadable."""


class SolutionValidationError(ExternalSolverError):
    """An externally produced assignment failed independent validation."""

    def __init__(self, report):
        self.report = report
        failed = ", ".join(sorted({f.check for f in report.failures}))
        super().__init__(f"external solution failed validation checks: {failed}")


class UnvalidatedSolutionError(IabPlanError):
    """A runtime topology was requested from a solution that fails validation."""
