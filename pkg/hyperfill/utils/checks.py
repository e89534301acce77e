import functools
import inspect
from typing import Callable, Tuple

from ..errors import InvalidParameter


Rule = Tuple[Callable[[object], bool], str]


def checked(**rules: Rule):
    """
    Decorator validating named arguments before the call.

    Each keyword maps an argument name to (predicate, description); a failing
    predicate raises InvalidParameter naming the argument, its value and the rule.
    Arguments left at None are not checked.
    """

    def decorator(func):
        sig = inspect.signature(func)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            bound = sig.bind(*args, **kwargs)
            bound.apply_defaults()
            for name, (predicate, description) in rules.items():
                value = bound.arguments.get(name)
                if value is None:
                    continue
                if not predicate(value):
                    raise InvalidParameter(f"{name}={value!r} violates {description}")
            return func(*args, **kwargs)

        return wrapper

    return decorator


def greater_than(bound: float) -> Rule:
    return (lambda v: float(v) > bound, f"> {bound}")


def at_least(bound: float) -> Rule:
    return (lambda v: float(v) >= bound, f">= {bound}")


def in_open_interval(lo: float, hi: float) -> Rule:
    return (lambda v: lo < float(v) < hi, f"in ({lo}, {hi})")


