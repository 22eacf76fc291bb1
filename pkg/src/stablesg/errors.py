"""Exception hierarchy shared by every module."""


class StableSGError(Exception):
    """Base class for errors raised by :mod:`stablesg`."""


class DimensionMismatch(StableSGError, ValueError):
    """Vectors or subspaces of incompatible dimension were combined."""


class DegenerateInput(StableSGError, ValueError):
    """Coincident points, a degenerate line, or duplicate points where forbidden."""


class NotOnSphere(StableSGError, ValueError):
    """A point expected on the unit sphere has norm away from 1."""


class CertificateError(StableSGError, ValueError):
    """A certificate, family or matrix violates its structural invariants."""


class HypothesisNotMet(StableSGError):
    """A theorem hypothesis failed; ``inequality`` names the violated condition."""

    def __init__(self, inequality, detail=""):
        self.inequality = inequality
        self.detail = detail
        msg = f"hypothesis not met: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TheoremViolation(StableSGError):
    """A guaranteed consequence failed to materialize.

    Raised when a step whose existence the proof guarantees cannot be
    carried out, which signals either a bug or an unmet hypothesis.
    """

    def __init__(self, flag, detail=""):
        self.flag = flag
        self.detail = detail
        msg = f"theorem violation: {flag}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SearchExhausted(StableSGError):
    """Randomized search ran out of attempts for some index."""

    def __init__(self, index, found, wanted):
        self.index = index
        self.found = found
        self.wanted = wanted
        super().__init__(
            f"search exhausted at index {index}: found {found} of {wanted} disjoint tuples")


class GenerationError(StableSGError, ValueError):
    """A generator could not meet its constraints with the given parameters."""
