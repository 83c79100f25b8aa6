"""Config-facing registries: build generators, integrands and symbols from string maps."""

from __future__ import annotations

import numpy as np

from mcflab import fourier, synth, testfun


class RegistryError(KeyError):
    def __init__(self, registry: str, key: str, known):
        super().__init__(f"unknown key {key!r} in registry {registry!r} (known: {', '.join(sorted(known))})")
        self.registry = registry
        self.key = key

    def __str__(self):
        return self.args[0]


def parse_list(text, cast=float) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(cast(t) for t in text)
    return tuple(cast(t.strip()) for t in str(text).split(",") if t.strip())


def parse_complex(text) -> np.ndarray:
    return np.array([complex(t.replace(" ", "")) for t in str(text).split(",") if t.strip()])


def _oscillation(sec: dict, d: int):
    direction = parse_list(sec.get("direction", ",".join(["1"] + ["0"] * (d - 1))), int)
    profile = sec.get("profile", "two-state")
    if profile == "two-state":
        w = synth.two_state(parse_complex(sec.get("a", "1")), parse_complex(sec.get("b", "0")),
                            float(sec.get("theta", 0.5)))
    elif profile == "sine":
        w = synth.sine(complex(sec.get("z", "1")))
    else:
        raise RegistryError("profiles", profile, ["two-state", "sine"])
    return synth.Oscillation(w, direction)


def _concentration(sec: dict, d: int):
    return synth.Concentration(synth.tent, complex(sec.get("z0", "1")), float(sec.get("p", 2.0)), d)


def _constant(sec: dict, d: int):
    return synth.Constant(parse_complex(sec.get("value", "0")), d=d)


def _damped(sec: dict, d: int):
    base = dict(sec)
    base["kind"] = base.pop("base", "oscillation")
    return synth.Damped(build_generator(base, d), float(sec.get("power", 1.0)))


GENERATORS = {
    "oscillation": _oscillation,
    "concentration": _concentration,
    "constant": _constant,
    "damped": _damped,
}


def build_generator(sec: dict, d: int):
    kind = sec.get("kind", "")
    if kind not in GENERATORS:
        raise RegistryError("generators", kind, GENERATORS)
    return GENERATORS[kind](sec, d)


def build_integrand(sec: dict, N: int = 1, p: float = 2.0):
    name = sec.get("name", "identity")
    if name == "identity":
        return testfun.identity(N, p)
    if name == "power":
        return testfun.power(N, p)
    if name == "truncation":
        return testfun.truncation(float(sec.get("k", 2.0)), N, p)
    if name == "window":
        return testfun.window(parse_complex(sec.get("z0", "1")), float(sec.get("width", 0.3)), p, N,
                              at_infinity=sec.get("at_infinity", "false").lower() == "true")
    raise RegistryError("integrands", name, ["identity", "power", "truncation", "window"])


def build_symbol(sec: dict):
    name = sec.get("name", "identity")
    if name == "identity":
        return fourier.identity()
    if name == "half-space":
        return fourier.half_space(parse_list(sec["xi0"]), float(sec.get("width", 0.0)))
    if name == "cone-cutoff":
        return fourier.cone_cutoff(parse_list(sec["xi0"]), float(sec.get("half_angle", np.pi / 16)))
    if name == "two-point":
        return fourier.two_point(complex(sec.get("plus", "1")), complex(sec.get("minus", "0")))
    raise RegistryError("symbols", name, fourier.SYMBOLS)
