"""Experiment configuration: INI parsing, validation, canonical form.

A config file has sections ``[target]`` and ``[run]``, at most one adapter
section matching ``run.adapter`` (``[fixed]``, ``[am]`` or ``[mhcma]``),
and an optional ``[diagnostics]`` section.  Vectors are whitespace or
comma separated (``0 0`` or ``0, 0``); matrices separate rows with ``;``
(``1 0.5; 0.5 2``); the token ``identity`` stands for the identity matrix
where a shape matrix is expected.

:func:`serialize_config` writes a canonical form with every default
resolved and floats at 17 significant digits, so parse(serialize(cfg))
reproduces ``cfg`` exactly; :func:`config_hash` fingerprints that form.
"""

import configparser
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .am import AmConfig
from .diagnostics import DiagnosticsParams
from .errors import AdaptmhError, ConfigError
from .mh import ProposalParams
from .mhcma import MhCmaConfig
from .spd import factorize
from .targets import make_target

ADAPTERS = ("fixed", "am", "mhcma")
_KNOWN_SECTIONS = ("target", "run", "fixed", "am", "mhcma", "diagnostics")
_FLOAT_FMT = "%.17g"
_REQUIRED = object()


def _format_float(v):
    return _FLOAT_FMT % float(v)


def _format_vector(vec):
    return " ".join(_format_float(v) for v in np.asarray(vec).ravel())


def _format_matrix(mat):
    mat = np.asarray(mat)
    return "; ".join(_format_vector(row) for row in mat)


class _SectionReader:
    """Typed key access over one INI section with unknown-key detection."""

    def __init__(self, name, mapping):
        self.name = name
        self.raw = dict(mapping)
        self.seen = set()

    def _fetch(self, key, default):
        self.seen.add(key)
        text = self.raw.get(key, "").strip()
        if text:
            return text
        if default is _REQUIRED:
            raise ConfigError(f"[{self.name}] missing required key '{key}'")
        return None

    def get_str(self, key, default=_REQUIRED):
        text = self._fetch(key, default)
        return default if text is None else text

    def get_int(self, key, default=_REQUIRED):
        text = self._fetch(key, default)
        if text is None:
            return default
        try:
            return int(text, 10)
        except ValueError:
            pass
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(
                f"[{self.name}] {key}: expected an integer, got {text!r}"
            ) from None
        if not v.is_integer():
            raise ConfigError(
                f"[{self.name}] {key}: expected an integer, got {text!r}"
            )
        return int(v)

    def get_float(self, key, default=_REQUIRED):
        text = self._fetch(key, default)
        if text is None:
            return default
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(
                f"[{self.name}] {key}: expected a number, got {text!r}"
            ) from None
        if not math.isfinite(v):
            raise ConfigError(f"[{self.name}] {key}: must be finite")
        return v

    def get_vector(self, key, default=_REQUIRED):
        text = self._fetch(key, default)
        if text is None:
            return default
        toks = text.replace(",", " ").split()
        try:
            return np.array([float(t) for t in toks], dtype=float)
        except ValueError:
            raise ConfigError(
                f"[{self.name}] {key}: expected a numeric vector, got {text!r}"
            ) from None

    def get_matrix(self, key, default=_REQUIRED, dim=None):
        text = self._fetch(key, default)
        if text is None:
            return default
        if text == "identity":
            if dim is None:
                raise ConfigError(
                    f"[{self.name}] {key}: 'identity' needs a known dimension"
                )
            return np.eye(dim)
        rows = [r for r in text.split(";") if r.strip()]
        parsed = []
        for r in rows:
            toks = r.replace(",", " ").split()
            try:
                parsed.append([float(t) for t in toks])
            except ValueError:
                raise ConfigError(
                    f"[{self.name}] {key}: expected a numeric matrix, "
                    f"got {text!r}"
                ) from None
        if len(set(len(r) for r in parsed)) != 1:
            raise ConfigError(f"[{self.name}] {key}: ragged matrix rows")
        return np.array(parsed, dtype=float)

    def finish(self):
        extra = sorted(set(self.raw) - self.seen)
        if extra:
            raise ConfigError(
                f"[{self.name}] unknown keys: {', '.join(extra)}"
            )


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Fully resolved experiment description.

    Every field carries its final value (defaults already applied), so two
    configs are interchangeable exactly when their canonical serializations
    match.  Use :func:`parse_config` / :func:`load_config` to build one.
    """

    target: object
    target_kind: str
    target_params: dict
    adapter: str
    adapter_cfg: object
    n_steps: int
    n_seeds: int
    base_seed: int
    burn_in: int
    x0: np.ndarray
    out_dir: str = None
    diagnostics: DiagnosticsParams = field(default_factory=DiagnosticsParams)

    def __post_init__(self):
        x0 = np.ascontiguousarray(self.x0, dtype=float)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self):
        return self.target.dim

    @property
    def p_target(self):
        if self.adapter == "mhcma":
            return self.adapter_cfg.p_target
        return None

    @property
    def seeds(self):
        """The per-chain seeds this experiment runs, in order."""
        return tuple(self.base_seed + k for k in range(self.n_seeds))


def _build_target(sec):
    kind = sec.get_str("kind").lower()
    if kind == "mixture":
        kind = "gaussian_mixture"
    if kind == "gaussian":
        dim = sec.get_int("dim", None)
        mean = sec.get_vector("mean", None)
        if mean is None and dim is None:
            raise ConfigError("[target] gaussian needs 'mean' or 'dim'")
        if mean is None:
            mean = np.zeros(dim)
        if dim is not None and mean.shape[0] != dim:
            raise ConfigError(
                f"[target] mean has {mean.shape[0]} entries but dim = {dim}"
            )
        cov = sec.get_matrix("cov", None, dim=mean.shape[0])
        if cov is None:
            cov = np.eye(mean.shape[0])
        params = {"mean": mean, "cov": cov}
    elif kind == "banana":
        b = sec.get_float("b")
        dim = sec.get_int("dim", None)
        base_cov = sec.get_matrix("base_cov", None, dim=dim)
        if base_cov is None:
            if dim is None:
                raise ConfigError("[target] banana needs 'base_cov' or 'dim'")
            base_cov = np.eye(dim)
        base_mean = sec.get_vector("base_mean", None)
        if base_mean is None:
            base_mean = np.zeros(base_cov.shape[0])
        params = {"b": b, "base_cov": base_cov, "base_mean": base_mean}
    elif kind == "gaussian_mixture":
        weights = sec.get_vector("weights")
        means = []
        covs = []
        for k in range(weights.shape[0]):
            mean_k = sec.get_vector(f"mean_{k}")
            means.append(mean_k)
            covs.append(sec.get_matrix(f"cov_{k}", dim=mean_k.shape[0]))
        params = {"weights": weights, "means": means, "covs": covs}
    else:
        raise ConfigError(f"[target] unknown kind {kind!r}")
    try:
        target = make_target(kind, **params)
    except AdaptmhError as exc:
        raise ConfigError(f"[target] {exc}") from None
    return target, kind, params


def _build_adapter(adapter, sec, dim):
    try:
        if adapter == "fixed":
            sigma = sec.get_float("sigma", 1.0)
            c0 = sec.get_matrix("c0", None, dim=dim)
            if c0 is None:
                c0 = np.eye(dim)
            return ProposalParams(sigma=sigma, C=factorize(c0))
        if adapter == "am":
            c0 = sec.get_matrix("c0", None, dim=dim)
            return AmConfig.with_defaults(
                dim,
                t0=sec.get_int("t0", None),
                s_d=sec.get_float("s_d", None),
                eps=sec.get_float("eps", None),
                C0=None if c0 is None else factorize(c0),
            )
        c0 = sec.get_matrix("c0", None, dim=dim)
        return MhCmaConfig.with_defaults(
            dim,
            p_target=sec.get_float("p_target", None),
            c_c=sec.get_float("c_c", None),
            c1_0=sec.get_float("c1_0", None),
            beta0=sec.get_float("beta0", None),
            gamma=sec.get_float("gamma", None),
            sigma0=sec.get_float("sigma0", None),
            C0=None if c0 is None else factorize(c0),
        )
    except ConfigError:
        raise
    except AdaptmhError as exc:
        raise ConfigError(f"[{adapter}] {exc}") from None


def _build_diagnostics(sec):
    tv_range = sec.get_vector("tv_range", None)
    if tv_range is not None:
        if tv_range.shape[0] != 2:
            raise ConfigError("[diagnostics] tv_range needs exactly 2 values")
        tv_range = (float(tv_range[0]), float(tv_range[1]))
    defaults = DiagnosticsParams()
    params = DiagnosticsParams(
        n_windows=sec.get_int("n_windows", defaults.n_windows),
        b1_drift_factor=sec.get_float(
            "b1_drift_factor", defaults.b1_drift_factor
        ),
        b2_decay_threshold=sec.get_float(
            "b2_decay_threshold", defaults.b2_decay_threshold
        ),
        am_growth_t_ref=sec.get_int(
            "am_growth_t_ref", defaults.am_growth_t_ref
        ),
        am_growth_factor=sec.get_float(
            "am_growth_factor", defaults.am_growth_factor
        ),
        moment_mean_tol=sec.get_float(
            "moment_mean_tol", defaults.moment_mean_tol
        ),
        moment_cov_tol=sec.get_float(
            "moment_cov_tol", defaults.moment_cov_tol
        ),
        acceptance_tol=sec.get_float(
            "acceptance_tol", defaults.acceptance_tol
        ),
        tv_axis=sec.get_int("tv_axis", defaults.tv_axis),
        tv_bins=sec.get_int("tv_bins", defaults.tv_bins),
        tv_range=defaults.tv_range if tv_range is None else tv_range,
    )
    try:
        return params.validate()
    except AdaptmhError as exc:
        raise ConfigError(f"[diagnostics] {exc}") from None


def parse_config(text):
    """Parse INI text into a validated :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, missing required keys,
        values out of range, or a starting point with zero target density.
    """
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",)
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"invalid config syntax: {exc}") from None
    if parser.defaults():
        raise ConfigError("[DEFAULT] section is not supported")
    unknown = [s for s in parser.sections() if s not in _KNOWN_SECTIONS]
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    for required in ("target", "run"):
        if required not in parser.sections():
            raise ConfigError(f"missing [{required}] section")

    tsec = _SectionReader("target", parser["target"])
    target, target_kind, target_params = _build_target(tsec)
    tsec.finish()
    dim = target.dim

    rsec = _SectionReader("run", parser["run"])
    adapter = rsec.get_str("adapter").lower()
    if adapter not in ADAPTERS:
        raise ConfigError(
            f"[run] adapter must be one of {', '.join(ADAPTERS)}, "
            f"got {adapter!r}"
        )
    n_steps = rsec.get_int("n_steps", 10000)
    if n_steps < 1:
        raise ConfigError("[run] n_steps must be >= 1")
    n_seeds = rsec.get_int("n_seeds", 4)
    if n_seeds < 1:
        raise ConfigError("[run] n_seeds must be >= 1")
    base_seed = rsec.get_int("base_seed", 1)
    if base_seed < 0:
        raise ConfigError("[run] base_seed must be >= 0")
    burn_in = rsec.get_int("burn_in", n_steps // 10)
    if not 0 <= burn_in < n_steps:
        raise ConfigError(
            f"[run] burn_in must be in [0, n_steps), got {burn_in}"
        )
    x0 = rsec.get_vector("x0", None)
    if x0 is None:
        x0 = np.zeros(dim)
    if x0.shape[0] != dim:
        raise ConfigError(
            f"[run] x0 has {x0.shape[0]} entries but the target has "
            f"dimension {dim}"
        )
    if target.log_density(x0) == -math.inf:
        raise ConfigError("[run] x0 has zero target density")
    out_dir = rsec.get_str("out_dir", None)
    rsec.finish()

    for other in ADAPTERS:
        if other != adapter and other in parser.sections():
            raise ConfigError(
                f"section [{other}] is present but run.adapter is "
                f"{adapter!r}"
            )
    if adapter in parser.sections():
        asec = _SectionReader(adapter, parser[adapter])
    else:
        asec = _SectionReader(adapter, {})
    adapter_cfg = _build_adapter(adapter, asec, dim)
    asec.finish()

    if "diagnostics" in parser.sections():
        dsec = _SectionReader("diagnostics", parser["diagnostics"])
    else:
        dsec = _SectionReader("diagnostics", {})
    diagnostics = _build_diagnostics(dsec)
    dsec.finish()

    return ExperimentConfig(
        target=target,
        target_kind=target_kind,
        target_params=target_params,
        adapter=adapter,
        adapter_cfg=adapter_cfg,
        n_steps=n_steps,
        n_seeds=n_seeds,
        base_seed=base_seed,
        burn_in=burn_in,
        x0=x0,
        out_dir=out_dir,
        diagnostics=diagnostics,
    )


def load_config(path):
    """Parse a config file from disk."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _target_lines(cfg):
    p = cfg.target_params
    lines = [f"kind = {cfg.target_kind}"]
    if cfg.target_kind == "gaussian":
        lines.append(f"mean = {_format_vector(p['mean'])}")
        lines.append(f"cov = {_format_matrix(p['cov'])}")
    elif cfg.target_kind == "banana":
        lines.append(f"b = {_format_float(p['b'])}")
        lines.append(f"base_mean = {_format_vector(p['base_mean'])}")
        lines.append(f"base_cov = {_format_matrix(p['base_cov'])}")
    else:
        lines.append(f"weights = {_format_vector(p['weights'])}")
        for k in range(len(p["means"])):
            lines.append(f"mean_{k} = {_format_vector(p['means'][k])}")
            lines.append(f"cov_{k} = {_format_matrix(p['covs'][k])}")
    return lines


def _adapter_lines(cfg):
    a = cfg.adapter_cfg
    if cfg.adapter == "fixed":
        return [
            f"sigma = {_format_float(a.sigma)}",
            f"c0 = {_format_matrix(a.C.mat)}",
        ]
    if cfg.adapter == "am":
        return [
            f"t0 = {a.t0}",
            f"s_d = {_format_float(a.s_d)}",
            f"eps = {_format_float(a.eps)}",
            f"c0 = {_format_matrix(a.C0.mat)}",
        ]
    return [
        f"sigma0 = {_format_float(a.sigma0)}",
        f"p_target = {_format_float(a.p_target)}",
        f"c_c = {_format_float(a.c_c)}",
        f"c1_0 = {_format_float(a.c1_0)}",
        f"beta0 = {_format_float(a.beta0)}",
        f"gamma = {_format_float(a.gamma)}",
        f"c0 = {_format_matrix(a.C0.mat)}",
    ]


def serialize_config(cfg):
    """Canonical INI text: fixed section and key order, resolved defaults.

    Parsing the result reproduces an equivalent config, and equal configs
    serialize to identical bytes, so this text is the hashing form.
    """
    d = cfg.diagnostics
    lines = ["[target]"]
    lines += _target_lines(cfg)
    lines += [
        "",
        "[run]",
        f"adapter = {cfg.adapter}",
        f"n_steps = {cfg.n_steps}",
        f"n_seeds = {cfg.n_seeds}",
        f"base_seed = {cfg.base_seed}",
        f"burn_in = {cfg.burn_in}",
        f"x0 = {_format_vector(cfg.x0)}",
    ]
    if cfg.out_dir is not None:
        lines.append(f"out_dir = {cfg.out_dir}")
    lines += ["", f"[{cfg.adapter}]"]
    lines += _adapter_lines(cfg)
    lines += [
        "",
        "[diagnostics]",
        f"n_windows = {d.n_windows}",
        f"b1_drift_factor = {_format_float(d.b1_drift_factor)}",
        f"b2_decay_threshold = {_format_float(d.b2_decay_threshold)}",
        f"am_growth_t_ref = {d.am_growth_t_ref}",
        f"am_growth_factor = {_format_float(d.am_growth_factor)}",
        f"moment_mean_tol = {_format_float(d.moment_mean_tol)}",
        f"moment_cov_tol = {_format_float(d.moment_cov_tol)}",
        f"acceptance_tol = {_format_float(d.acceptance_tol)}",
        f"tv_axis = {d.tv_axis}",
        f"tv_bins = {d.tv_bins}",
        f"tv_range = {_format_vector(d.tv_range)}",
        "",
    ]
    return "\n".join(lines)


def config_hash(cfg):
    """Hex sha256 of the canonical serialization."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()
