"""Lattice models as Laurent polynomials in the generalized Bloch factor beta.

A single-band model is one Laurent polynomial h(beta) = sum_d t_d beta**d.  A
two-band model of the chiral form [[0, R+], [R-, 0]] is stored by its two
off-diagonal polynomials; its energies satisfy R+(beta) R-(beta) = E**2.

Real-space convention: (H psi)_n = sum_d t_d psi_{n+d}, so the coefficient of
degree d sits on the d-th superdiagonal (negative d: subdiagonal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .errors import DomainError, SizeError, UnsupportedModelError


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise DomainError(f"coefficient must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


@dataclass(frozen=True)
class LaurentPolynomial:
    """Finite map degree -> complex coefficient with no stored zeros."""

    terms: tuple[tuple[int, complex], ...]

    def __init__(self, terms: Mapping[int, complex] | None = None):
        clean = {}
        for d, c in (terms or {}).items():
            c = _as_complex(c)
            if c != 0:
                clean[int(d)] = clean.get(int(d), 0) + c
        object.__setattr__(
            self, "terms", tuple(sorted((d, c) for d, c in clean.items() if c != 0))
        )

    @property
    def coeffs(self) -> dict[int, complex]:
        return dict(self.terms)

    @property
    def min_degree(self) -> int:
        return self.terms[0][0] if self.terms else 0

    @property
    def max_degree(self) -> int:
        return self.terms[-1][0] if self.terms else 0

    def is_bidirectional(self) -> bool:
        return bool(self.terms) and self.min_degree < 0 < self.max_degree

    def __call__(self, beta):
        return eval_laurent(self, beta)

    def __getitem__(self, degree: int) -> complex:
        return dict(self.terms).get(degree, 0j)

    def __mul__(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        out: dict[int, complex] = {}
        for d1, c1 in self.terms:
            for d2, c2 in other.terms:
                out[d1 + d2] = out.get(d1 + d2, 0) + c1 * c2
        return LaurentPolynomial(out)

    def scaled(self, factor: complex) -> "LaurentPolynomial":
        """Coefficients multiplied by a constant."""
        return LaurentPolynomial({d: c * factor for d, c in self.terms})

    def substituted(self, r: complex) -> "LaurentPolynomial":
        """The polynomial beta -> p(r * beta)."""
        return LaurentPolynomial({d: c * r**d for d, c in self.terms})

    def derivative(self, order: int = 1) -> "LaurentPolynomial":
        out = {}
        for d, c in self.terms:
            f = 1
            for i in range(order):
                f *= d - i
            if f:
                out[d - order] = c * f
        return LaurentPolynomial(out)

    def scale(self) -> float:
        return float(sum(abs(c) for _, c in self.terms))

    def to_dict(self) -> dict[int, list[float]]:
        return {d: [c.real, c.imag] for d, c in self.terms}


def eval_laurent(p: LaurentPolynomial, beta):
    """Evaluate sum_d terms[d] * beta**d.  Accepts scalars or arrays."""
    b = np.asarray(beta, dtype=complex)
    if np.any(b == 0):
        raise DomainError("Laurent polynomial evaluated at beta = 0")
    out = np.zeros_like(b)
    for d, c in p.terms:
        out = out + c * b**d
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SingleBandModel:
    h: LaurentPolynomial
    name: str = "single-band"

    bands = 1

    @property
    def energy_poly(self) -> LaurentPolynomial:
        return self.h

    @property
    def p(self) -> int:
        """Number of negative-degree hoppings (rank of the lower middle root)."""
        return -self.h.min_degree

    @property
    def min_degree(self) -> int:
        return self.h.min_degree

    @property
    def max_degree(self) -> int:
        return self.h.max_degree

    def blocks(self) -> dict[int, np.ndarray]:
        return {d: np.array([[c]]) for d, c in self.h.terms}

    def energy(self, beta):
        return eval_laurent(self.h, beta)

    def scale(self) -> float:
        return self.h.scale()

    def substituted(self, r: complex) -> "SingleBandModel":
        return SingleBandModel(self.h.substituted(r), self.name)

    def scaled(self, factor: complex) -> "SingleBandModel":
        return SingleBandModel(self.h.scaled(factor), self.name)


@dataclass(frozen=True)
class TwoBandModel:
    r_plus: LaurentPolynomial
    r_minus: LaurentPolynomial
    name: str = "two-band"

    bands = 2

    @property
    def q(self) -> LaurentPolynomial:
        """Squared-energy polynomial R+ R-."""
        return self.r_plus * self.r_minus

    @property
    def energy_poly(self) -> LaurentPolynomial:
        return self.q

    @property
    def p(self) -> int:
        return -self.q.min_degree

    @property
    def min_degree(self) -> int:
        return min(self.r_plus.min_degree, self.r_minus.min_degree)

    @property
    def max_degree(self) -> int:
        return max(self.r_plus.max_degree, self.r_minus.max_degree)

    def blocks(self) -> dict[int, np.ndarray]:
        out = {}
        for d in range(self.min_degree, self.max_degree + 1):
            blk = np.array([[0, self.r_plus[d]], [self.r_minus[d], 0]], dtype=complex)
            if np.any(blk):
                out[d] = blk
        return out

    def energy(self, beta):
        """Principal square root of q(beta); the other band is its negative."""
        return np.sqrt(eval_laurent(self.q, beta) + 0j)

    def scale(self) -> float:
        return self.r_plus.scale() + self.r_minus.scale()

    def substituted(self, r: complex) -> "TwoBandModel":
        return TwoBandModel(self.r_plus.substituted(r), self.r_minus.substituted(r), self.name)

    def scaled(self, factor: complex) -> "TwoBandModel":
        return TwoBandModel(self.r_plus.scaled(factor), self.r_minus.scaled(factor), self.name)


Model = SingleBandModel | TwoBandModel


def single_band(terms: Mapping[int, complex], name: str = "single-band") -> SingleBandModel:
    return SingleBandModel(LaurentPolynomial(terms), name)


def ssh_model(t1, t2, t3, gamma, name: str = "ssh") -> TwoBandModel:
    """Non-Hermitian SSH chain with intracell t1, intercell t2, long-range t3 +/- gamma."""
    r_plus = LaurentPolynomial({0: t1, -1: t2, 1: t3 + gamma})
    r_minus = LaurentPolynomial({0: t1, 1: t2, -1: t3 - gamma})
    return TwoBandModel(r_plus, r_minus, name)


@dataclass(frozen=True)
class DisorderSpec:
    """Uniform per-cell redraw of the coefficient at degree `target`.

    The value t becomes t + u_n with u_n ~ U[-amplitude, amplitude], one draw
    per unit cell n.  For two-band models both R+ and R- coefficients at that
    degree receive the same draw.
    """

    target: int
    amplitude: float
    seed: int

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError("disorder amplitude must be >= 0")
        if self.seed < 0:
            raise DomainError("disorder seed must be unsigned")

    def draws(self, n_cells: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.uniform(-self.amplitude, self.amplitude, size=n_cells)


@dataclass(frozen=True)
class RealSpaceMatrix:
    matrix: np.ndarray = field(repr=False)
    L: int
    bands: int
    boundary: str
    model_name: str
    disorder_seed: int | None = None

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def cell_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.L), self.bands)


def bloch_energies(model: Model, k) -> np.ndarray:
    """Band energies on the unit circle beta = exp(ik).

    Scalar k returns an array of length `bands`; array k returns shape
    (bands, len(k)).  Two-band energies are (+sqrt q, -sqrt q).
    """
    beta = np.exp(1j * np.asarray(k, dtype=float))
    if model.bands == 1:
        e = eval_laurent(model.h, beta)
        return np.array([e])
    s = np.sqrt(eval_laurent(model.q, beta) + 0j)
    return np.array([s, -s])


def characteristic_coeffs(model: Model, E: complex) -> np.ndarray:
    """Dense coefficients (highest degree first) of the characteristic polynomial in beta.

    Single band: beta**(-p_min) * (h(beta) - E).  Two band: beta**s * (q(beta) - E**2).
    """
    poly = model.energy_poly
    if not poly.is_bidirectional():
        raise UnsupportedModelError(
            f"model {model.name!r} needs hoppings in both directions "
            f"(degrees {poly.min_degree}..{poly.max_degree})"
        )
    target = E if model.bands == 1 else E * E
    lo, hi = poly.min_degree, poly.max_degree
    c = np.zeros(hi - lo + 1, dtype=complex)
    for d, v in poly.terms:
        c[hi - d] += v
    c[hi] -= target
    return c


def min_chain_length(model: Model) -> int:
    return model.max_degree - model.min_degree + 2


def build_chain(
    model: Model,
    L: int,
    boundary: str = "open",
    disorder: DisorderSpec | None = None,
) -> RealSpaceMatrix:
    """Dense real-space Hamiltonian of L unit cells."""
    if boundary not in ("open", "periodic"):
        raise DomainError(f"unknown boundary {boundary!r}")
    if L < min_chain_length(model):
        raise SizeError(f"L={L} is below the minimum {min_chain_length(model)} for {model.name!r}")
    nb = model.bands
    H = np.zeros((L * nb, L * nb), dtype=complex)
    blocks = model.blocks()
    shifts = disorder.draws(L) if disorder is not None else None
    for d, blk in blocks.items():
        for n in range(L):
            m = n + d
            if not 0 <= m < L:
                if boundary == "open":
                    continue
                m %= L
            H[n * nb:(n + 1) * nb, m * nb:(m + 1) * nb] += blk
    if shifts is not None:
        _apply_disorder(H, model, L, disorder.target, shifts, boundary)
    return RealSpaceMatrix(
        H, L, nb, boundary, model.name, None if disorder is None else disorder.seed
    )


def _apply_disorder(H, model, L, target, shifts, boundary):
    nb = model.bands
    if nb == 1:
        if model.h[target] == 0:
            raise DomainError(f"model has no coefficient at degree {target}")
        pattern = np.array([[1.0]])
    else:
        pattern = np.array(
            [[0, model.r_plus[target] != 0], [model.r_minus[target] != 0, 0]], dtype=float
        )
        if not pattern.any():
            raise DomainError(f"model has no coefficient at degree {target}")
    for n in range(L):
        m = n + target
        if not 0 <= m < L:
            if boundary == "open":
                continue
            m %= L
        H[n * nb:(n + 1) * nb, m * nb:(m + 1) * nb] += shifts[n] * pattern


def divided_difference(poly: LaurentPolynomial, x: complex, y: complex) -> complex:
    """(P(x) - P(y)) / (x - y) expanded termwise, finite at x = y."""
    total = 0j
    for d, c in poly.terms:
        if d > 0:
            s = sum(x**a * y ** (d - 1 - a) for a in range(d))
        elif d < 0:
            m = -d
            s = -(x**d) * (y**d) * sum(x**a * y ** (m - 1 - a) for a in range(m))
        else:
            s = 0
        total += c * s
    return total


# -- model files -------------------------------------------------------------

def _poly_from_file(block) -> LaurentPolynomial:
    if not isinstance(block, Mapping):
        raise DomainError("polynomial block must map degree -> [re, im]")
    return LaurentPolynomial({int(d): _as_complex(v) for d, v in block.items()})


def model_from_dict(doc: Mapping) -> tuple[Model, DisorderSpec | None]:
    kind = doc.get("kind")
    name = str(doc.get("name", kind or "model"))
    if kind == "single":
        model: Model = SingleBandModel(_poly_from_file(doc["terms"]), name)
    elif kind == "two-band":
        model = TwoBandModel(_poly_from_file(doc["r_plus"]), _poly_from_file(doc["r_minus"]), name)
    else:
        raise DomainError(f"model kind must be 'single' or 'two-band', got {kind!r}")
    if not model.energy_poly.is_bidirectional():
        raise UnsupportedModelError(f"model {name!r} has one-sided hopping")
    disorder = None
    if doc.get("disorder"):
        d = doc["disorder"]
        target = d.get("target", 0)
        if target == "intracell":
            target = 0
        disorder = DisorderSpec(int(target), float(d["delta"]), int(d.get("seed", 0)))
    return model, disorder


def model_to_dict(model: Model, disorder: DisorderSpec | None = None) -> dict:
    if model.bands == 1:
        doc = {"name": model.name, "kind": "single", "terms": model.h.to_dict()}
    else:
        doc = {
            "name": model.name,
            "kind": "two-band",
            "r_plus": model.r_plus.to_dict(),
            "r_minus": model.r_minus.to_dict(),
        }
    if disorder is not None:
        doc["disorder"] = {
            "target": disorder.target,
            "delta": disorder.amplitude,
            "seed": disorder.seed,
        }
    return doc


def load_model(path) -> tuple[Model, DisorderSpec | None]:
    with open(Path(path), encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, Mapping):
        raise DomainError(f"{path}: model file must be a mapping")
    return model_from_dict(doc)


def preset_path(name: str):
    """Traversable for a shipped model preset (e.g. "fig1")."""
    ref = resources.files("nonbloch") / "presets" / "models" / f"{name}.yaml"
    if not ref.is_file():
        raise DomainError(f"unknown preset {name!r}")
    return ref


def load_preset(name: str) -> tuple[Model, DisorderSpec | None]:
    with resources.as_file(preset_path(name)) as p:
        return load_model(p)


def dump_model(model: Model, path, disorder: DisorderSpec | None = None) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        yaml.safe_dump(model_to_dict(model, disorder), fh, sort_keys=False)


def wrap_angle(theta):
    """Map angles to (-pi, pi]."""
    t = np.mod(np.asarray(theta, dtype=float) + math.pi, 2 * math.pi) - math.pi
    t = np.where(t <= -math.pi, t + 2 * math.pi, t)
    t = np.where(np.isclose(t, -math.pi, atol=1e-15), math.pi, t)
    return float(t) if t.ndim == 0 else t
