"""Experiment configuration: TOML parsing and exhaustive validation.

Every module precondition that a campaign could trip is checked up front;
validation collects all violations and reports them together, so a bad
config never starts sampling.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bayes import ZoomPolicy
from .blackbox import BlackBoxPolicy
from .errors import ConfigError, PreconditionError
from .frames import FrameMisalignment
from .measurement import NoiseModel
from .multiparam import MultiHamiltonian, TrotterPlan
from .pauli import PauliProduct, PauliSum

MODES = (
    "trace",
    "estimate-continuous",
    "estimate-discrete",
    "multiparam",
    "frame-align",
    "search-bound",
)


def parse_pauli_sum(n: int, entries) -> PauliSum:
    """Entries like "1.0*ZI" (or bare "ZI" for coefficient 1)."""
    terms = []
    for item in entries:
        text = str(item).strip()
        if "*" in text:
            coeff_s, letters = text.split("*", 1)
            coeff = float(coeff_s)
        else:
            coeff, letters = 1.0, text
        terms.append((coeff, letters.strip().strip('"')))
    return PauliSum.from_strings(n, terms)


@dataclass
class ExperimentConfig:
    """Validated campaign description for one mode."""

    mode: str
    noise: NoiseModel
    trials: int
    threads: int = 0
    out_dir: str = "results"
    svg: bool = False
    max_nonconverged_fraction: float = 0.02
    targets: tuple = (1e-6,)
    zoom_policy: Optional[ZoomPolicy] = None
    blackbox_policy: Optional[BlackBoxPolicy] = None
    # mode-specific payloads
    h0: Optional[PauliSum] = None
    sigma1: Optional[PauliProduct] = None
    theta_true: float = 0.0
    trace_times: tuple = ()
    trace_want_sin: bool = True
    multi: Optional[MultiHamiltonian] = None
    plan: Optional[TrotterPlan] = None
    frame: Optional[FrameMisalignment] = None
    search_n_values: tuple = ()
    search_q: int = 1
    search_q_values: tuple = ()
    search_theta: float = 0.0
    search_s_index: int = 0
    search_interleave: str = "random"
    search_instances: int = 1
    raw_text: str = ""

    @property
    def config_hash(self) -> str:
        """Hash of the experiment definition.

        Covers everything that determines the numbers in the output files;
        excludes execution mechanics (threads, output path, plotting) so a
        re-run with a different thread count stays byte-identical.
        """
        parts = [
            self.mode, repr(self.noise), str(self.trials), repr(self.targets),
            repr(self.zoom_policy), repr(self.blackbox_policy), repr(self.h0),
            repr(self.sigma1), repr(self.theta_true), repr(self.trace_times),
            repr(self.trace_want_sin), repr(self.multi), repr(self.plan),
            repr(self.frame), repr(self.search_n_values),
            repr(self.search_q_values), repr(self.search_theta),
            repr(self.search_s_index), self.search_interleave,
            repr(self.search_instances),
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    data = tomllib.loads(raw.decode())
    if overrides:
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, _, key = dotted.partition(".")
            if key:
                data.setdefault(section, {})[key] = value
            else:
                data[section] = value
    text = raw.decode() + "".join(
        f"\n# override {k}={v}" for k, v in sorted((overrides or {}).items())
        if v is not None
    )
    return build_config(data, raw_text=text)


def build_config(data: dict, raw_text: str = "") -> ExperimentConfig:
    """Validate a parsed config dict; raises ConfigError listing every problem."""
    problems: list = []

    def need(section: str, key: str, default=None, required=False):
        sec = data.get(section, {})
        if key not in sec:
            if required:
                problems.append(f"missing [{section}] {key}")
            return default
        return sec[key]

    mode = data.get("mode")
    if mode not in MODES:
        problems.append(f"mode must be one of {MODES}, got {mode!r}")
        raise ConfigError(problems)

    delta = need("noise", "delta", required=True)
    reps = need("noise", "repetitions", 1)
    seed = need("noise", "seed", 0)
    noise = None
    try:
        noise = NoiseModel(delta=float(delta or 0), repetitions=int(reps),
                           seed=int(seed))
    except (PreconditionError, TypeError, ValueError) as exc:
        problems.append(f"[noise]: {exc}")

    trials = need("run", "trials", 100)
    threads = need("run", "threads", 0)
    out_dir = need("run", "out", "results")
    max_nc = need("run", "max_nonconverged_fraction", 0.02)
    if not isinstance(trials, int) or trials < 0:
        problems.append(f"[run] trials must be a non-negative integer, got {trials!r}")
        trials = 0

    targets_raw = need("policy", "target_precision", 1e-6)
    if isinstance(targets_raw, (int, float)):
        targets = (float(targets_raw),)
    else:
        targets = tuple(float(v) for v in targets_raw)
    for t in targets:
        if not (t > 0):
            problems.append(f"[policy] target precision must be positive, got {t}")

    zoom_policy = blackbox_policy = None
    policy_kwargs = dict(
        c=float(need("policy", "c", 10.0)),
        delta=float(delta) if delta else 1e-3,
        max_steps=int(need("policy", "max_steps", 60)),
        target_precision=min(targets),
    )
    if mode in ("estimate-continuous", "multiparam"):
        try:
            zoom_policy = ZoomPolicy(
                c_prime=float(need("policy", "c_prime", 10.0)),
                theta_floor=float(need("policy", "theta_floor", 0.05)),
                **policy_kwargs,
            )
        except PreconditionError as exc:
            problems.append(f"[policy]: {exc}")
    if mode in ("estimate-discrete", "frame-align"):
        try:
            blackbox_policy = BlackBoxPolicy(
                b=int(need("policy", "b", 8)), **policy_kwargs)
        except PreconditionError as exc:
            problems.append(f"[policy]: {exc}")

    cfg = ExperimentConfig(
        mode=mode, noise=noise or NoiseModel(delta=1e-3), trials=trials,
        threads=int(threads), out_dir=str(out_dir), raw_text=raw_text,
        max_nonconverged_fraction=float(max_nc), targets=targets,
        zoom_policy=zoom_policy, blackbox_policy=blackbox_policy,
        svg=bool(need("run", "svg", False)),
    )

    if mode in ("trace", "estimate-continuous", "estimate-discrete"):
        n = need("hamiltonian", "n", required=True)
        h0_entries = need("hamiltonian", "h0", required=True)
        sigma1_s = need("hamiltonian", "sigma1", required=True)
        if not problems:
            try:
                cfg.h0 = parse_pauli_sum(int(n), h0_entries)
                cfg.sigma1 = PauliProduct.from_string(str(sigma1_s))
                from .pauli import find_su2_partner

                find_su2_partner(cfg.h0, cfg.sigma1)
            except (PreconditionError, ValueError) as exc:
                problems.append(f"[hamiltonian]: {exc}")
        cfg.theta_true = float(need("truth", "theta", required=True) or 0.0)
        if mode == "trace":
            cfg.trace_times = tuple(float(v) for v in need("trace", "t_values", [1.0]))
            cfg.trace_want_sin = bool(need("trace", "want_sin", True))
        if mode == "estimate-continuous" and cfg.zoom_policy and not problems:
            if not (0 < cfg.theta_true < math.pi):
                problems.append(
                    f"[truth] theta must lie in (0, pi), got {cfg.theta_true}")
        if mode == "estimate-discrete" and cfg.blackbox_policy and cfg.h0 is not None:
            if not problems:
                mu, _ = _partner_index(cfg)
                eff = cfg.h0.terms[mu][0] * cfg.theta_true
                if not (0 < eff < math.pi / 4):
                    problems.append(
                        f"[truth] effective angle {eff:g} outside (0, pi/4) "
                        "required by black-box estimation")
    elif mode == "multiparam":
        n = need("hamiltonian", "n", required=True)
        couplings = need("hamiltonian", "couplings", required=True)
        priors = need("truth", "prior_means", required=True)
        order = int(need("multiparam", "order", 2))
        slices = int(need("multiparam", "slices", 64))
        if not problems:
            try:
                entries = []
                for item in couplings:
                    coeff_s, letters = str(item).split("*", 1)
                    entries.append((float(coeff_s), letters.strip()))
                cfg.multi = MultiHamiltonian.from_entries(int(n), entries, priors)
                cfg.plan = TrotterPlan(order=order, slices=slices)
            except (PreconditionError, ValueError) as exc:
                problems.append(f"[hamiltonian/multiparam]: {exc}")
    elif mode == "frame-align":
        n = need("frame", "n", required=True)
        kind = need("frame", "kind", "uniparametric")
        theta = float(need("truth", "theta", required=True) or 0.0)
        euler = need("truth", "euler", None)
        if not problems:
            try:
                gens = tuple(
                    parse_pauli_sum(int(n), need("frame", key, required=True))
                    for key in ("h0", "h1", "h2")
                )
                cfg.frame = FrameMisalignment(
                    kind=str(kind), theta=theta, generators=gens,
                    euler=tuple(float(v) for v in euler) if euler else None,
                )
            except (PreconditionError, ValueError, TypeError) as exc:
                problems.append(f"[frame]: {exc}")
            scale = 2.0 if kind == "uniparametric" else 1.0
            if cfg.blackbox_policy and not (0 < scale * theta < math.pi / 4):
                problems.append(
                    f"[truth] effective angle {scale * theta:g} outside (0, pi/4)")
    elif mode == "search-bound":
        cfg.search_n_values = tuple(int(v) for v in need("search", "n_values", required=True) or ())
        cfg.search_q = int(need("search", "q_calls", 1))
        q_values = need("search", "q_values", None)
        cfg.search_q_values = (tuple(int(v) for v in q_values) if q_values
                               else tuple(cfg.search_q for _ in cfg.search_n_values))
        cfg.search_theta = float(need("search", "theta", math.pi / 2))
        cfg.search_s_index = int(need("search", "s_index", 0))
        cfg.search_interleave = str(need("search", "interleave", "random"))
        cfg.search_instances = int(need("search", "instances", 1))
        for n in cfg.search_n_values:
            if n > 10:
                problems.append(f"[search] probe size {n} exceeds the dense cap 10")
            if not (0 <= cfg.search_s_index < 2 ** max(n, 1)):
                problems.append(f"[search] s_index {cfg.search_s_index} out of range for n={n}")
        if len(cfg.search_q_values) != len(cfg.search_n_values):
            problems.append("[search] q_values must match n_values in length")
        if cfg.search_theta == 0:
            problems.append("[search] oracle phase theta must be nonzero")
        if cfg.search_interleave not in ("random", "identity", "saturating"):
            problems.append(
                "[search] interleave must be 'random', 'identity' or "
                f"'saturating', got {cfg.search_interleave!r}")

    if problems:
        raise ConfigError(problems)
    return cfg


def _partner_index(cfg: ExperimentConfig):
    from .pauli import find_su2_partner

    return find_su2_partner(cfg.h0, cfg.sigma1)
