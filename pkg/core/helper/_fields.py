"""
Field normalisation for frozen config dataclasses.

JSON has a single number type, so ``"horizon_days": 125.0`` arrives as a float.
Count fields are turned into ``int`` here before validation.
"""

import numbers

from core.utils.errors import ConfigurationError


def coerce_whole_numbers(instance, names, optional=()):
    """
    Replace whole-number floats with ``int`` on a frozen dataclass.

    Args:
        instance: Dataclass instance being initialised
        names (iterable): Field names that must hold integers
        optional (iterable): Subset of ``names`` that may also be None

    Raises:
        ConfigurationError: A field holds a fraction, a bool or a non-number
    """
    for name in names:
        value = getattr(instance, name)
        if value is None and name in optional:
            continue
        if isinstance(value, bool):
            raise ConfigurationError(name, "must be a whole number, not a boolean")
        if isinstance(value, numbers.Integral):
            object.__setattr__(instance, name, int(value))
        elif isinstance(value, numbers.Real) and float(value).is_integer():
            object.__setattr__(instance, name, int(value))
        else:
            raise ConfigurationError(name, f"must be a whole number, got {value!r}")
