from typing import Callable

from .context import RunContext
from . import chung, cov, lilconst, modulus, sample, smallball, validate

Handler = Callable[[RunContext], None]

HANDLERS: dict[str, Handler] = {
    "validate": validate.run,
    "cov": cov.run,
    "sample": sample.run,
    "smallball": smallball.run,
    "chung": chung.run,
    "modulus": modulus.run,
    "lilconst": lilconst.run,
}

# порядок этапов для подкоманды all
PIPELINE = ("validate", "cov", "sample", "smallball", "chung", "modulus", "lilconst")


def run_all(ctx: RunContext) -> None:
    for name in PIPELINE:
        HANDLERS[name](ctx)


HANDLERS["all"] = run_all

__all__ = [
    "RunContext",
    "HANDLERS",
    "PIPELINE",
    "run_all",
]
