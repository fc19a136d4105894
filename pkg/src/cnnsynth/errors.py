"""Exception types shared across the package."""


class SynthError(Exception):
    """Base class for every error raised by cnnsynth."""


class DocumentError(SynthError):
    """A network document could not be parsed.

    ``location`` is a dotted path into the document (``macro_layers[2].name``)
    or a ``line:col`` pair for syntax errors.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class StructuralError(SynthError):
    """The network violates a structural invariant (wiring, positivity)."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings))


class DivisibilityError(SynthError):
    """A scaling factor does not divide every depth in its macro-layer."""


class ScopeError(SynthError):
    """Invalid class scope or a classifier width that does not match it."""


class EnumerationCapError(SynthError):
    """Exhaustive enumeration was refused because the space is too large."""


class InfeasibleError(SynthError):
    """No plan satisfies both the budget condition and the bottleneck policy.

    ``below`` and ``above`` are the nearest achievable parameter counts on
    either side of the requested range (``None`` when nothing exists there).
    """

    def __init__(self, message, below=None, above=None):
        self.below = below
        self.above = above
        super().__init__(message)
