"""The certification loop, certificate records and state-file I/O."""

from __future__ import annotations

import enum
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .extraction import ExtractionError, atoms_to_decomposition, extract_atoms, is_flat, prune_decomposition, refine_decomposition
from .moment_relaxation import TruncatedMomentSequence, assemble_sdp, write_sdp_dump
from .poly_algebra import VariableLayout, random_sos
from .sdp_solver import InfeasibilityCertificate, SdpStatus, SolverOptions, solve, verify_certificate
from .tensor_core import (
    Decomposition,
    HermitianTensor,
    NotHermitianError,
    StateEnsemble,
    TensorError,
    check_structure,
    density_to_tensor,
    ensemble_to_tensor,
    normalize_trace,
    product_state,
    symmetrize,
)

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-8


class Verdict(str, enum.Enum):
    SEPARABLE = "separable"
    NOT_SEPARABLE = "not_separable"
    UNDETERMINED = "undetermined"


@dataclass
class CertifyOptions:
    mode: str = "partitioned"
    seed: int = 0
    k_max: int | None = None  # None means d/2 + 3
    rank_tol: float = 1e-6
    feas_tol: float = 1e-8
    residual_tol: float = 1e-6
    d_override: int | None = None
    # relaxations with more moments than this end the run as undetermined
    max_moments: int = 6000
    max_iter: int = 200
    rescale_trace: bool = False
    # least-squares polish of extracted atoms when the raw residual misses residual_tol
    refine: bool = True
    dump_dir: str | Path | None = None
    verbose: bool = False

    def __post_init__(self):
        if self.mode not in ("symmetric", "partitioned"):
            raise ValueError(f"mode must be 'symmetric' or 'partitioned', got {self.mode!r}")
        for name in ("rank_tol", "feas_tol", "residual_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.d_override is not None and self.d_override % 2:
            raise ValueError("d_override must be even")

    def degree(self, m: int) -> int:
        d = 2 * (m + 1) if self.d_override is None else self.d_override
        if d < 2 * m + 2:
            raise ValueError(f"d={d} must be at least 2m + 2 = {2 * m + 2}")
        return d

    def levels(self, m: int) -> range:
        d = self.degree(m)
        k_max = d // 2 + 3 if self.k_max is None else self.k_max
        if k_max < d // 2:
            raise ValueError(f"k_max={k_max} is below the first level d/2={d // 2}")
        return range(d // 2, k_max + 1)


@dataclass
class Certificate:
    verdict: Verdict
    mode: str
    dims: tuple[int, ...]
    decomposition: Decomposition | None = None
    level_k: int | None = None
    flat_t: int | None = None
    residual: float | None = None
    infeasibility: InfeasibilityCertificate | None = None
    margin: float | None = None
    k_max_reached: bool = False
    diagnostics: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def rank(self) -> int | None:
        return None if self.decomposition is None else self.decomposition.rank

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "verdict": self.verdict.value,
            "mode": self.mode,
            "dims": list(self.dims),
            "level_k": self.level_k,
            "flat_t": self.flat_t,
            "residual": self.residual,
            "margin": self.margin,
            "k_max_reached": self.k_max_reached,
            "diagnostics": self.diagnostics,
            "metadata": self.metadata,
        }
        if self.decomposition is not None:
            d = self.decomposition
            out["decomposition"] = {
                "symmetric": d.symmetric,
                "weights": d.weights.tolist(),
                "atoms": [[_complex_list(v) for v in atom] for atom in d.vectors],
                "residual": d.residual,
            }
        if self.infeasibility is not None:
            c = self.infeasibility
            out["infeasibility"] = {"kind": c.kind, "lam": c.lam.tolist(), "X": [x.tolist() for x in c.X]}
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Certificate:
        dec = None
        if data.get("decomposition") is not None:
            dd = data["decomposition"]
            atoms = tuple(tuple(_complex_array(v) for v in atom) for atom in dd["atoms"])
            dec = Decomposition(dd["symmetric"], np.array(dd["weights"], dtype=float), atoms, dd.get("residual"))
        inf = None
        if data.get("infeasibility") is not None:
            di = data["infeasibility"]
            inf = InfeasibilityCertificate(tuple(np.array(x, dtype=float) for x in di["X"]), np.array(di["lam"], dtype=float), di["kind"])
        return cls(
            verdict=Verdict(data["verdict"]),
            mode=data["mode"],
            dims=tuple(data["dims"]),
            decomposition=dec,
            level_k=data.get("level_k"),
            flat_t=data.get("flat_t"),
            residual=data.get("residual"),
            infeasibility=inf,
            margin=data.get("margin"),
            k_max_reached=bool(data.get("k_max_reached", False)),
            diagnostics=list(data.get("diagnostics", [])),
            metadata=dict(data.get("metadata", {})),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Certificate):
            return NotImplemented
        return json.dumps(self.to_dict(), sort_keys=True) == json.dumps(other.to_dict(), sort_keys=True)


def _complex_list(v: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).ravel()]


def _complex_array(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValueError("complex numbers must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def prepare_tensor(H: HermitianTensor, mode: str, rescale_trace: bool = False) -> HermitianTensor:
    """Checks and normalizations applied before the relaxation is built."""
    report = check_structure(H, SYMMETRY_TOL)
    if not report.hermitian:
        raise NotHermitianError(report.max_asymmetry)
    H = normalize_trace(H, rescale=rescale_trace)
    if mode == "symmetric":
        if not H.dims.equal:
            raise TensorError("symmetric mode needs equal party dimensions")
        if not report.symmetric:
            raise TensorError(f"tensor is not symmetric (permutation defect {report.max_permutation_defect:.3e})")
        # the right-hand sides must be exactly permutation invariant
        H = symmetrize(H)
    return H


def certify(H: HermitianTensor, options: CertifyOptions | None = None) -> Certificate:
    """Run the hierarchy on ``H`` until a decomposition or an infeasibility proof is found."""
    opts = options or CertifyOptions()
    t_start = time.perf_counter()
    H = prepare_tensor(H, opts.mode, opts.rescale_trace)
    dims = H.dims
    layout = VariableLayout(opts.mode, dims.dims)
    d = opts.degree(dims.m)
    F = random_sos(layout.nvars, d, opts.seed)
    solver_opts = SolverOptions(feas_tol=opts.feas_tol, max_iter=opts.max_iter, verbose=opts.verbose)
    cert = Certificate(Verdict.UNDETERMINED, opts.mode, dims.dims)
    cert.metadata = {"seed": opts.seed, "d": d, "trace": H.trace}

    def finish(c: Certificate) -> Certificate:
        c.metadata["seconds"] = time.perf_counter() - t_start
        c.metadata["residual_tol"] = opts.residual_tol
        return c

    for k in opts.levels(dims.m):
        level: dict[str, Any] = {"k": k}
        cert.diagnostics.append(level)
        t0 = time.perf_counter()
        problem = assemble_sdp(H, opts.mode, k, F)
        level.update(problem.sizes)
        if problem.num_moments > opts.max_moments:
            level["skipped"] = f"{problem.num_moments} moments exceed max_moments={opts.max_moments}"
            log.info("level %d: %s", k, level["skipped"])
            return finish(cert)
        if opts.dump_dir is not None:
            Path(opts.dump_dir).mkdir(parents=True, exist_ok=True)
            write_sdp_dump(problem, Path(opts.dump_dir) / f"level{k}.txt")
        sol = solve(problem, solver_opts)
        level.update(status=sol.status.value, message=sol.message, iterations=sol.iterations, residuals=sol.residuals, seconds=time.perf_counter() - t0)
        log.info("level %d: %s (%s) in %.1fs", k, sol.status.value, sol.message, level["seconds"])

        if sol.status is SdpStatus.INFEASIBLE:
            cert.verdict = Verdict.NOT_SEPARABLE
            cert.level_k, cert.infeasibility, cert.margin = k, sol.certificate, sol.margin
            return finish(cert)
        if sol.y is None:
            # numerical failure without a usable moment vector
            return finish(cert)

        y = TruncatedMomentSequence(layout.nvars, 2 * k, sol.y)
        flat_checks = []
        level["flat_checks"] = flat_checks
        for t in range(1, k + 1):
            w = is_flat(y, t, opts.rank_tol)
            entry = {"t": t, "rank": w.rank_r, "rank_prev": w.rank_tminus1}
            flat_checks.append(entry)
            if not w.flat:
                continue
            try:
                mu = extract_atoms(y, t, w, seed=opts.seed, blocks=layout.blocks())
                dec = atoms_to_decomposition(mu, layout, H)
            except (ExtractionError, TensorError, ValueError) as exc:
                entry["extraction"] = str(exc)
                continue
            entry["residual"] = dec.residual
            if opts.refine and dec.residual > opts.residual_tol:
                polished = refine_decomposition(dec, H)
                entry["refined_residual"] = polished.residual
                if polished.residual < dec.residual:
                    dec = polished
            if dec.residual <= opts.residual_tol and dec.rank > 1:
                pruned = prune_decomposition(dec, H, opts.residual_tol, refine=opts.refine)
                if pruned.rank < dec.rank:
                    entry["pruned_from"] = dec.rank
                    dec = pruned
            if dec.residual <= opts.residual_tol:
                cert.verdict = Verdict.SEPARABLE
                cert.decomposition, cert.level_k, cert.flat_t, cert.residual = dec, k, t, dec.residual
                return finish(cert)
    cert.k_max_reached = True
    return finish(cert)


def run_etkm_sdr(H: HermitianTensor, options: CertifyOptions | None = None) -> Certificate:
    return certify(H, options)


# --- files ------------------------------------------------------------------------


class StateFileError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def _pair(value, where: str) -> complex:
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise StateFileError(where, "expected a [re, im] pair of numbers")
    return complex(value[0], value[1])


def state_from_dict(data: Any) -> HermitianTensor:
    if not isinstance(data, dict):
        raise StateFileError("", "top level must be an object")
    dims = data.get("dims")
    if not (isinstance(dims, list) and dims and all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims)):
        raise StateFileError("dims", "expected a non-empty list of positive integers")
    D = int(np.prod(dims))
    has_e, has_d = "ensemble" in data, "density" in data
    if has_e == has_d:
        raise StateFileError("", "exactly one of 'ensemble' or 'density' is required")
    try:
        if has_e:
            terms = data["ensemble"]
            if not isinstance(terms, list) or not terms:
                raise StateFileError("ensemble", "expected a non-empty list")
            parsed = []
            for i, term in enumerate(terms):
                where = f"ensemble[{i}]"
                if not isinstance(term, dict):
                    raise StateFileError(where, "expected an object with 'p' and 'amplitudes'")
                p = term.get("p")
                if not isinstance(p, (int, float)) or isinstance(p, bool):
                    raise StateFileError(f"{where}.p", "expected a number")
                amps = term.get("amplitudes")
                if not isinstance(amps, list) or len(amps) != D:
                    raise StateFileError(f"{where}.amplitudes", f"expected {D} [re, im] pairs")
                parsed.append((float(p), np.array([_pair(a, f"{where}.amplitudes[{j}]") for j, a in enumerate(amps)])))
            return ensemble_to_tensor(StateEnsemble(tuple(dims), tuple(parsed)))
        rows = data["density"]
        if not isinstance(rows, list) or len(rows) != D:
            raise StateFileError("density", f"expected {D} rows")
        mat = np.zeros((D, D), dtype=complex)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != D:
                raise StateFileError(f"density[{i}]", f"expected {D} entries")
            for j, v in enumerate(row):
                mat[i, j] = _pair(v, f"density[{i}][{j}]")
        return density_to_tensor(mat, dims)
    except StateFileError:
        raise
    except TensorError as exc:
        raise StateFileError("ensemble" if has_e else "density", str(exc)) from exc


def parse_state_file(path: str | Path) -> tuple[HermitianTensor, tuple[int, ...]]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StateFileError("", f"invalid JSON: {exc}") from exc
    H = state_from_dict(data)
    return H, H.dims.dims


def state_to_dict(H: HermitianTensor) -> dict[str, Any]:
    return {"dims": list(H.dims.dims), "density": [_complex_list(row) for row in H.matrix()]}


def _density(dec: Decomposition, m: int) -> np.ndarray:
    """``sum_i w_i |psi_i><psi_i|`` built with Kronecker products."""
    out = 0
    for i, w in enumerate(dec.weights):
        psi = product_state(dec.party_vectors(i, m))
        out = out + w * np.outer(psi, psi.conj())
    return out


def decomposition_residual(dec: Decomposition, H: HermitianTensor) -> float:
    """Frobenius distance between ``H`` and the density matrix of ``dec``."""
    return float(np.linalg.norm(_density(dec, H.dims.m) - H.matrix()))


def write_certificate(cert: Certificate, path: str | Path, tensor: HermitianTensor | None = None) -> None:
    """Write ``cert`` as JSON; with ``tensor`` given, a separable verdict is re-checked first."""
    if tensor is not None and cert.verdict is Verdict.SEPARABLE:
        tol = cert.metadata.get("residual_tol", 1e-6)
        res = decomposition_residual(cert.decomposition, prepare_tensor(tensor, cert.mode))
        if res > tol:
            raise ValueError(f"decomposition residual {res:.3e} exceeds {tol:.1e}; refusing to write")
    Path(path).write_text(json.dumps(cert.to_dict(), indent=1))


def read_certificate(path: str | Path) -> Certificate:
    return Certificate.from_dict(json.loads(Path(path).read_text()))


@dataclass
class VerificationReport:
    ok: bool
    verdict: Verdict
    value: float | None
    message: str


def verify(cert: Certificate, H: HermitianTensor) -> VerificationReport:
    """Re-check a certificate against the state, without rerunning the hierarchy."""
    if tuple(cert.dims) != H.dims.dims:
        return VerificationReport(False, cert.verdict, None, f"dims {cert.dims} do not match state {H.dims.dims}")
    H = prepare_tensor(H, cert.mode)
    if cert.verdict is Verdict.SEPARABLE:
        dec = cert.decomposition
        if dec is None:
            return VerificationReport(False, cert.verdict, None, "separable certificate without decomposition")
        if dec.symmetric != (cert.mode == "symmetric"):
            return VerificationReport(False, cert.verdict, None, "decomposition symmetry does not match mode")
        tol = cert.metadata.get("residual_tol", 1e-6)
        res = decomposition_residual(dec, H)
        return VerificationReport(res <= tol, cert.verdict, res, f"residual {res:.3e} (tolerance {tol:.1e})")
    if cert.verdict is Verdict.NOT_SEPARABLE:
        if cert.infeasibility is None or cert.level_k is None:
            return VerificationReport(False, cert.verdict, None, "missing infeasibility certificate")
        layout = VariableLayout(cert.mode, H.dims.dims)
        d = cert.metadata.get("d", 2 * (H.dims.m + 1))
        # the objective does not enter the certificate; any admissible one rebuilds the constraints
        problem = assemble_sdp(H, cert.mode, cert.level_k, random_sos(layout.nvars, d, 0))
        try:
            margin = verify_certificate(problem, cert.infeasibility)
        except ValueError as exc:
            return VerificationReport(False, cert.verdict, None, f"malformed certificate: {exc}")
        return VerificationReport(margin > 0, cert.verdict, margin, f"margin {margin:.3e}")
    return VerificationReport(False, cert.verdict, None, "undetermined certificates carry nothing to verify")
