# config.py
# Configuração do voltbound.
#   - .env / variáveis de ambiente → constantes padrão (abaixo)
#   - JSON da execução (--config) → RunConfig
#   - flags do CLI sobrescrevem o JSON
# Precedência: CLI > JSON > ambiente > padrão embutido.

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from services.errors import ConfigError

load_dotenv()

# ===================== Configurações padrão =====================

QUADRATURE_N = int(os.getenv("VOLTBOUND_QUADRATURE_N", "2048"))
GRID_N = int(os.getenv("VOLTBOUND_GRID_N", "2001"))
REFINE_TOL = float(os.getenv("VOLTBOUND_REFINE_TOL", "1e-10"))
REL_TOL = float(os.getenv("VOLTBOUND_REL_TOL", "1e-9"))
OUT_DIR = os.getenv("VOLTBOUND_OUT_DIR", "exports")
CURVE_N = int(os.getenv("VOLTBOUND_CURVE_N", "401"))
WORKERS = int(os.getenv("VOLTBOUND_WORKERS", "1"))

MODES = ("forward", "bounds", "pipeline", "sweep")
GENERATORS = ("layered_disk", "coreshell", "laminate")

# chaves que o CLI pode sobrescrever
OVERRIDABLE = (
    "quadrature_n", "grid_n", "refine_tol", "emit_curves", "curve_n",
    "out_dir", "workers", "trace_file", "measurement_file",
)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    sigma1: complex | None = None
    sigma2: complex | None = None
    generator: str | None = None
    generator_params: dict = field(default_factory=dict)
    trace_file: str | None = None
    measurement_file: str | None = None
    sweep: dict | None = None
    quadrature_n: int = QUADRATURE_N
    grid_n: int = GRID_N
    refine_tol: float = REFINE_TOL
    emit_curves: bool = False
    curve_n: int = CURVE_N
    curve_f_values: tuple = ()
    out_dir: str = OUT_DIR
    workers: int = WORKERS
    config_path: str | None = None

    @property
    def has_conductivities(self) -> bool:
        return self.sigma1 is not None and self.sigma2 is not None


def as_complex(value, name: str) -> complex:
    """Aceita [re, im], {"re": .., "im": ..} ou um número real."""
    try:
        if isinstance(value, dict):
            return complex(float(value["re"]), float(value.get("im", 0.0)))
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError
            return complex(float(value[0]), float(value[1]))
        return complex(float(value), 0.0)
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"'{name}' inválido: esperado [re, im], recebido {value!r}") from None


def read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"Arquivo não encontrado: {p}")
    try:
        with p.open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON inválido em {p}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{p}: o documento precisa ser um objeto JSON")
    return doc


def _layered_disk_params(doc: dict) -> dict:
    radii = doc.get("radii")
    phases = doc.get("layer_phase")
    if not isinstance(radii, list) or not isinstance(phases, list):
        raise ConfigError("'radii' e 'layer_phase' precisam ser listas")
    params = {
        "radii": tuple(float(r) for r in radii),
        "layer_phase": tuple(int(a) for a in phases),
    }
    has_modes = "bc_modes" in doc
    has_affine = "affine_u" in doc
    if has_modes == has_affine:
        raise ConfigError("informe exatamente um entre 'bc_modes' e 'affine_u'")
    if has_modes:
        modes = {}
        for item in doc["bc_modes"]:
            try:
                n = int(item["n"])
                modes[n] = modes.get(n, 0j) + complex(float(item.get("re", 0.0)), float(item.get("im", 0.0)))
            except (KeyError, TypeError, ValueError):
                raise ConfigError(f"modo de contorno inválido: {item!r}") from None
        if not modes:
            raise ConfigError("'bc_modes' vazio")
        params["bc_modes"] = modes
    else:
        params["affine_u"] = _affine_u(doc["affine_u"])
    return params


def _affine_u(value) -> tuple:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError("'affine_u' precisa de 2 componentes complexas")
    return tuple(as_complex(c, "affine_u") for c in value)


def _coreshell_params(block) -> dict:
    try:
        return {"R1": float(block["R1"]), "R2": float(block["R2"]), "k": float(block.get("k", 0.0))}
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"bloco 'coreshell' inválido: {block!r}") from None


def _laminate_params(block) -> dict:
    try:
        f1 = float(block["f1"])
        fld = block["field"]
        normal = block.get("normal", [1.0, 0.0])
        params = {
            "f1": f1,
            "field": tuple(as_complex(c, "laminate.field") for c in fld),
            "normal": (float(normal[0]), float(normal[1])),
        }
    except (KeyError, TypeError, ValueError, IndexError):
        raise ConfigError(f"bloco 'laminate' inválido: {block!r}") from None
    if len(params["field"]) != 2:
        raise ConfigError("'laminate.field' precisa de 2 componentes")
    if not 0.0 < f1 < 1.0:
        raise ConfigError(f"'laminate.f1' fora de (0, 1): {f1}")
    return params


def _sweep_params(block) -> dict:
    if not isinstance(block, dict):
        raise ConfigError("bloco 'sweep' ausente ou inválido")
    try:
        r1 = float(block["R1"])
        r3 = float(block["R3"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("'sweep' precisa de R1 e R3") from None
    fv = block.get("f_values", {"start": 0.01, "stop": 0.99, "num": 99})
    if isinstance(fv, dict):
        start, stop, num = float(fv["start"]), float(fv["stop"]), int(fv["num"])
        if num < 1:
            raise ConfigError("'sweep.f_values.num' precisa ser ≥ 1")
        step = (stop - start) / (num - 1) if num > 1 else 0.0
        f_values = tuple(round(start + i * step, 12) for i in range(num))
    else:
        f_values = tuple(float(v) for v in fv)
    if not f_values or any(not 0.0 < v < 1.0 for v in f_values):
        raise ConfigError("'sweep.f_values' precisa estar em (0, 1)")
    pairs = []
    for i, item in enumerate(block.get("pairs", [])):
        name = str(item.get("name", f"par{i + 1}"))
        pairs.append((name, as_complex(item["sigma1"], f"{name}.sigma1"), as_complex(item["sigma2"], f"{name}.sigma2")))
    if not pairs:
        raise ConfigError("'sweep.pairs' vazio")
    if not 0.0 < r1 < r3:
        raise ConfigError(f"raios do sweep inválidos: R1={r1}, R3={r3}")
    return {
        "R1": r1,
        "R3": r3,
        "f_values": f_values,
        "pairs": tuple(pairs),
        "affine_u": _affine_u(block.get("affine_u", [[-2.0, 1.0], [0.6, -1.4]])),
    }


def _detect_generator(doc: dict):
    found = []
    if "radii" in doc:
        found.append(("layered_disk", _layered_disk_params(doc)))
    if "coreshell" in doc:
        found.append(("coreshell", _coreshell_params(doc["coreshell"])))
    if "laminate" in doc:
        found.append(("laminate", _laminate_params(doc["laminate"])))
    if len(found) > 1:
        raise ConfigError(f"mais de um gerador no config: {', '.join(g for g, _ in found)}")
    return found[0] if found else (None, {})


def load_run_config(mode: str, config_path=None, overrides: dict | None = None) -> RunConfig:
    if mode not in MODES:
        raise ConfigError(f"modo desconhecido: {mode}")
    doc = read_json(config_path) if config_path else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    def pick(key, default):
        if key in overrides:
            return overrides[key]
        return doc.get(key, default)

    sigma1 = as_complex(doc["sigma1"], "sigma1") if "sigma1" in doc else None
    sigma2 = as_complex(doc["sigma2"], "sigma2") if "sigma2" in doc else None
    generator, params = _detect_generator(doc)

    try:
        cfg = RunConfig(
            mode=mode,
            sigma1=sigma1,
            sigma2=sigma2,
            generator=generator,
            generator_params=params,
            trace_file=pick("trace_file", None),
            measurement_file=pick("measurement_file", None),
            sweep=_sweep_params(doc.get("sweep")) if mode == "sweep" else None,
            quadrature_n=int(pick("quadrature_n", QUADRATURE_N)),
            grid_n=int(pick("grid_n", GRID_N)),
            refine_tol=float(pick("refine_tol", REFINE_TOL)),
            emit_curves=bool(pick("emit_curves", False)),
            curve_n=int(pick("curve_n", CURVE_N)),
            curve_f_values=tuple(float(v) for v in doc.get("curve_f_values", [])),
            out_dir=str(pick("out_dir", OUT_DIR)),
            workers=int(pick("workers", WORKERS)),
            config_path=str(config_path) if config_path else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"parâmetro numérico inválido: {exc}") from None

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.quadrature_n < 16 or cfg.quadrature_n % 2:
        raise ConfigError(f"quadrature_n precisa ser par e ≥ 16 (recebido {cfg.quadrature_n})")
    if cfg.grid_n < 3:
        raise ConfigError(f"grid_n precisa ser ≥ 3 (recebido {cfg.grid_n})")
    if not cfg.refine_tol > 0:
        raise ConfigError("refine_tol precisa ser positivo")
    if cfg.curve_n < 3:
        raise ConfigError("curve_n precisa ser ≥ 3")
    if cfg.workers < 1:
        raise ConfigError("workers precisa ser ≥ 1")

    if cfg.mode in ("forward", "pipeline"):
        if cfg.generator is None:
            raise ConfigError(f"modo {cfg.mode} exige um gerador (radii / coreshell / laminate)")
        if cfg.trace_file or cfg.measurement_file:
            raise ConfigError(f"modo {cfg.mode} não aceita trace_file/measurement_file")
        if not cfg.has_conductivities:
            raise ConfigError("sigma1 e sigma2 são obrigatórios")
    elif cfg.mode == "bounds":
        if bool(cfg.trace_file) == bool(cfg.measurement_file):
            raise ConfigError("modo bounds exige exatamente um entre trace_file e measurement_file")
