"""Exception hierarchy.

Errors deriving from :class:`ValidationError` signal that the inputs are
mathematically unsuitable (a degenerate form, an unattainable moment target,
...). The command line maps them to exit status 2.
"""


class ContactThermoError(Exception):
    """Base class for all package errors."""


class ValidationError(ContactThermoError):
    """Inputs violate a mathematical precondition."""


class SingularForm(ValidationError):
    """The one-form is degenerate (not contact) at some evaluated point."""


class DerivativeFailure(ContactThermoError):
    """A derivative was requested but is neither analytic nor differentiable numerically."""


class NonFiniteValue(ValidationError):
    """NaN or infinity encountered where a finite value is required."""


class NonPositiveMass(ValidationError):
    pass


class RepresentationMismatch(ValidationError):
    """Operation needs a scale-field contact form but got a general one (or vice versa)."""


class NotContactomorphism(ValidationError):
    pass


class StepTooLarge(ValidationError):
    pass


class Overflow(ValidationError):
    """Exponent exceeds the representable range even after max-shifting."""


class NotAttainable(ValidationError):
    """Moment targets lie outside the achievable range, Newton failed."""


class NotInvariant(ValidationError):
    pass


class EmptyBall(ValidationError):
    """A Bowen ball contains no quadrature node."""


class UnknownSubcommand(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    pass
