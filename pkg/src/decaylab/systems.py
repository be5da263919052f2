"""First-order symmetric systems with degenerate damping.

A system is the constant-coefficient Cauchy problem

    A0 w_t + sum_j Aj w_{x_j} + L w = sum_{jk} Bjk w_{x_j x_k}

with A0 symmetric positive definite, each Aj symmetric, L symmetric
nonnegative, and (optionally) a second-order dissipation tensor Bjk whose
directional contraction B(omega) = sum Bjk omega_j omega_k is symmetric
nonnegative for every unit direction.  The undamped subspace is the
intersection of ker L with the common null space of B(omega); P denotes the
orthogonal projector onto it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

__all__ = [
    "LinearDissipativeSystem",
    "PredicateResult",
    "ValidationReport",
    "make_system",
    "omega_samples",
    "kernel_projector",
    "validate_symmetric_dissipative",
    "write_system",
    "read_system",
]

# Relative tolerance for structural identities (symmetry, projector algebra)
STRUCT_TOL = 1e-10
# Relative slack on eigenvalue sign checks
EIG_TOL = 1e-8


def _sym_defect(m: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(m)), 1.0)
    return float(np.linalg.norm(m - m.T)) / scale


@dataclass(frozen=True)
class LinearDissipativeSystem:
    """Constant-coefficient symmetric system with degenerate damping."""

    name: str
    n: int
    N: int
    N1: int
    A0: np.ndarray
    A: np.ndarray  # shape (n, N, N)
    L: np.ndarray
    P: np.ndarray
    B: np.ndarray | None = None  # shape (n, n, N, N) when present

    def A_of(self, omega: np.ndarray) -> np.ndarray:
        """Directional flux matrix sum_j Aj omega_j."""
        omega = np.asarray(omega, dtype=np.float64)
        return np.tensordot(omega, self.A, axes=(0, 0))

    def B_of(self, omega: np.ndarray) -> np.ndarray:
        """Directional second-order dissipation, zero matrix if B absent."""
        if self.B is None:
            return np.zeros((self.N, self.N))
        omega = np.asarray(omega, dtype=np.float64)
        return np.einsum("j,k,jkab->ab", omega, omega, self.B)

    def dissipation_of(self, omega: np.ndarray) -> np.ndarray:
        """Total dissipation L + B(omega) entering kernel and gap analysis."""
        return self.L + self.B_of(omega)

    @property
    def has_parabolic_part(self) -> bool:
        return self.B is not None


def omega_samples(n: int, rng: np.random.Generator | None = None,
                  extra: int = 0) -> np.ndarray:
    """Standard unit-direction sample sets: {+-1}, 64 angles, 26-point set."""
    if n == 1:
        base = np.array([[1.0], [-1.0]])
    elif n == 2:
        theta = 2.0 * np.pi * np.arange(64) / 64
        base = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif n == 3:
        from .quadrature import sphere_design_26

        base, _ = sphere_design_26()
    else:
        raise ValueError("n must be 1, 2 or 3")
    if extra and rng is not None:
        g = rng.standard_normal((extra, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        base = np.vstack([base, g])
    return base


def kernel_projector(mats: list[np.ndarray], tol: float = STRUCT_TOL) -> np.ndarray:
    """Orthogonal projector onto the common null space of the given matrices.

    The matrices are stacked and the null space is read off the SVD; for the
    built-in models the result is exact to rounding (e.g. diag(1, 0, ..., 0)
    for damped Euler).
    """
    stack = np.vstack([np.asarray(m, dtype=np.float64) for m in mats])
    scale = max(float(np.linalg.norm(stack, 2)), 1.0)
    u, s, vt = np.linalg.svd(stack, full_matrices=True)
    null_mask = np.ones(vt.shape[0], dtype=bool)
    null_mask[: s.size] = s <= tol * scale
    basis = vt[null_mask].T
    p = basis @ basis.T
    return 0.5 * (p + p.T)


def make_system(
    A0: np.ndarray,
    A: list[np.ndarray] | np.ndarray,
    L: np.ndarray,
    B: np.ndarray | None = None,
    name: str = "system",
) -> LinearDissipativeSystem:
    """Assemble a system, deriving the undamped projector and its rank."""
    A0 = np.asarray(A0, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 2:
        A = A[np.newaxis]
    L = np.asarray(L, dtype=np.float64)
    n = A.shape[0]
    N = A0.shape[0]
    if A.shape != (n, N, N) or L.shape != (N, N) or A0.shape != (N, N):
        raise ValueError("inconsistent matrix shapes")
    if B is not None:
        B = np.asarray(B, dtype=np.float64)
        if B.ndim == 2:
            B = B[np.newaxis, np.newaxis]
        if B.shape != (n, n, N, N):
            raise ValueError("B must have shape (n, n, N, N)")

    sys0 = LinearDissipativeSystem(name, n, N, 0, A0, A, L,
                                   np.zeros((N, N)), B)
    mats = [L] + [sys0.dissipation_of(w) for w in omega_samples(n)]
    P = kernel_projector(mats)
    N1 = int(round(np.trace(P)))
    for arr in (A0, A, L, P) + (() if B is None else (B,)):
        arr.setflags(write=False)
    return LinearDissipativeSystem(name, n, N, N1, A0, A, L, P, B)


@dataclass(frozen=True)
class PredicateResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


@dataclass
class ValidationReport:
    system: str
    checks: list[PredicateResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, residual: float, tol: float,
            detail: str = "") -> None:
        self.checks.append(PredicateResult(name, bool(passed), float(residual),
                                           float(tol), detail))

    def summary(self) -> str:
        lines = [f"validation of {self.system}: "
                 f"{'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            status = "ok  " if c.passed else "FAIL"
            lines.append(
                f"  [{status}] {c.name}: residual {c.residual:.3e}"
                f" (tol {c.tolerance:.1e})"
                + (f" {c.detail}" if c.detail else "")
            )
        return "\n".join(lines)


def validate_symmetric_dissipative(
    system: LinearDissipativeSystem,
    omegas: np.ndarray | None = None,
) -> ValidationReport:
    """Check every structural predicate of the symmetric dissipative class.

    Symmetry and projector identities use a relative tolerance of 1e-10;
    eigenvalue sign conditions get a relative slack of 1e-8 times the matrix
    norm, as fixed for the whole package.
    """
    rep = ValidationReport(system.name)
    A0, L, P = system.A0, system.L, system.P
    if omegas is None:
        omegas = omega_samples(system.n)

    rep.add("A0 symmetric", _sym_defect(A0) <= STRUCT_TOL, _sym_defect(A0),
            STRUCT_TOL)
    a0_eigs = np.linalg.eigvalsh(0.5 * (A0 + A0.T))
    scale0 = max(float(np.abs(a0_eigs).max()), 1.0)
    rep.add("A0 positive definite", a0_eigs.min() > EIG_TOL * scale0,
            float(a0_eigs.min()), EIG_TOL * scale0,
            detail=f"min eig {a0_eigs.min():.6g}")

    for j in range(system.n):
        d = _sym_defect(system.A[j])
        rep.add(f"A{j + 1} symmetric", d <= STRUCT_TOL, d, STRUCT_TOL)

    rep.add("L symmetric", _sym_defect(L) <= STRUCT_TOL, _sym_defect(L),
            STRUCT_TOL)
    l_eigs = np.linalg.eigvalsh(0.5 * (L + L.T))
    scale_l = max(float(np.abs(l_eigs).max()), 1.0)
    rep.add("L nonnegative", l_eigs.min() >= -EIG_TOL * scale_l,
            float(l_eigs.min()), EIG_TOL * scale_l)
    if float(np.linalg.norm(L)) == 0.0 and not system.has_parabolic_part:
        # accepted, but callers should know the flow is purely conservative
        rep.add("dissipation coverage", True, 0.0, 0.0,
                detail="no dissipation: L = 0 and no diffusion")

    # projector algebra
    d_proj = float(np.linalg.norm(P @ P - P) + np.linalg.norm(P - P.T))
    rep.add("P orthogonal projector", d_proj <= STRUCT_TOL, d_proj, STRUCT_TOL)
    d_trace = abs(float(np.trace(P)) - system.N1)
    rep.add("trace(P) equals N1", d_trace <= STRUCT_TOL, d_trace, STRUCT_TOL)
    d_lp = float(np.linalg.norm(L @ P)) / max(float(np.linalg.norm(L)), 1.0)
    rep.add("L annihilates range(P)", d_lp <= STRUCT_TOL, d_lp, STRUCT_TOL)

    # rank of the total dissipation on each sampled direction
    worst_rank = 0
    rank_ok = True
    for w in omegas:
        D = system.dissipation_of(w)
        eigs = np.linalg.eigvalsh(0.5 * (D + D.T))
        scale_d = max(float(np.abs(eigs).max()), 1.0)
        r = int(np.sum(eigs > EIG_TOL * scale_d))
        if r != system.N - system.N1:
            rank_ok = False
        worst_rank = max(worst_rank, abs(r - (system.N - system.N1)))
    rep.add("dissipation rank equals N - N1", rank_ok, float(worst_rank), 0.0)

    if system.has_parabolic_part:
        worst_sym = 0.0
        worst_eig = 0.0
        worst_null = 0.0
        for w in omegas:
            Bw = system.B_of(w)
            worst_sym = max(worst_sym, _sym_defect(Bw))
            eigs = np.linalg.eigvalsh(0.5 * (Bw + Bw.T))
            scale_b = max(float(np.abs(eigs).max()), 1.0)
            worst_eig = min(worst_eig, float(eigs.min() / scale_b))
            worst_null = max(
                worst_null,
                float(np.linalg.norm(Bw @ P)) / max(float(np.linalg.norm(Bw)), 1.0),
            )
        rep.add("B(omega) symmetric", worst_sym <= STRUCT_TOL, worst_sym,
                STRUCT_TOL)
        rep.add("B(omega) nonnegative", worst_eig >= -EIG_TOL, worst_eig,
                EIG_TOL)
        rep.add("B(omega) annihilates range(P)", worst_null <= STRUCT_TOL,
                worst_null, STRUCT_TOL)
    return rep


def _format_float(x: float) -> str:
    return repr(float(x))


def _write_matrix(lines: list[str], key: str, m: np.ndarray) -> None:
    lines.append(key)
    for row in np.atleast_2d(m):
        lines.append(" ".join(_format_float(v) for v in row))


def write_system(path, system: LinearDissipativeSystem) -> None:
    """Plain-text bundle: keys n, N, A0, A1..An, L, optional Bjk.

    Floats are emitted with shortest round-trip repr, so write -> read ->
    write reproduces the file byte for byte.
    """
    lines = [f"name {system.name}", f"n {system.n}", f"N {system.N}"]
    _write_matrix(lines, "A0", system.A0)
    for j in range(system.n):
        _write_matrix(lines, f"A{j + 1}", system.A[j])
    _write_matrix(lines, "L", system.L)
    if system.B is not None:
        for j in range(system.n):
            for k in range(system.n):
                _write_matrix(lines, f"B{j + 1}{k + 1}", system.B[j, k])
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_system(path) -> LinearDissipativeSystem:
    with open(path) as fh:
        tokens = [ln.strip() for ln in fh if ln.strip()]
    header: dict[str, str] = {}
    i = 0
    while i < len(tokens) and " " in tokens[i] and tokens[i].split()[0] in (
        "name", "n", "N"
    ):
        k, v = tokens[i].split(None, 1)
        header[k] = v
        i += 1
    name = header.get("name", "system")
    n = int(header["n"])
    N = int(header["N"])

    def read_matrix() -> np.ndarray:
        nonlocal i
        rows = []
        for _ in range(N):
            rows.append([float(tok) for tok in tokens[i].split()])
            i += 1
        m = np.asarray(rows)
        if m.shape != (N, N):
            raise ValueError(f"{path}: malformed {N}x{N} matrix block")
        return m

    mats: dict[str, np.ndarray] = {}
    while i < len(tokens):
        key = tokens[i]
        i += 1
        mats[key] = read_matrix()

    A0 = mats.pop("A0")
    L = mats.pop("L")
    A = np.stack([mats.pop(f"A{j + 1}") for j in range(n)])
    B = None
    if mats:
        B = np.zeros((n, n, N, N))
        for j in range(n):
            for k in range(n):
                B[j, k] = mats.pop(f"B{j + 1}{k + 1}")
        if mats:
            raise ValueError(f"{path}: unrecognized keys {sorted(mats)}")
    return make_system(A0, A, L, B=B, name=name)
