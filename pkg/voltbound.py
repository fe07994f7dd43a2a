#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
voltbound: limites para a fração de volume de um corpo bifásico a partir de
medições de contorno com condutividades complexas.

Modos:
  forward   gera o traço (V, σ∂V/∂n) de um disco em camadas / core–shell,
            ou a medição de um laminado
  bounds    calcula os limites a partir de um traço ou de uma medição
  pipeline  forward + bounds em memória, com diagnósticos
  sweep     anel de três camadas, varrendo f1 para vários pares (σ1, σ2)

Uso típico:
  python voltbound.py pipeline --config configs/anel_referencia.json --emit-curves
  python voltbound.py forward  --config configs/anel_referencia.json --out ./exports/anel
  python voltbound.py bounds   --config configs/anel_referencia.json --trace-file ./exports/anel/trace.json
  python voltbound.py sweep    --config configs/sweep_camadas.json --workers 4
"""

import argparse
import time

from services.config import MODES, load_run_config
from services.errors import VoltboundError
from services.pipeline import RUNNERS, fmt_elapsed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voltbound",
        description="Limites de fração de volume a partir de medições de contorno (condutividades complexas).",
    )
    parser.add_argument("mode", choices=MODES, help="forward | bounds | pipeline | sweep")
    parser.add_argument("--config", help="Arquivo JSON da execução")
    parser.add_argument("--out", dest="out_dir", help="Diretório de saída (padrão: VOLTBOUND_OUT_DIR ou ./exports)")
    parser.add_argument("--quadrature-n", dest="quadrature_n", type=int,
                        help="Nós da quadratura no contorno (par, ≥ 16)")
    parser.add_argument("--grid-n", dest="grid_n", type=int, help="Pontos da grade de varredura em f (≥ 3)")
    parser.add_argument("--refine-tol", dest="refine_tol", type=float, help="Tolerância da bisseção")
    parser.add_argument("--emit-curves", dest="emit_curves", action="store_true", default=None,
                        help="Escreve as curvas CSV (retângulo, Δ, p̃max, Δ̃, elipses)")
    parser.add_argument("--curve-n", dest="curve_n", type=int, help="Pontos por curva CSV")
    parser.add_argument("--workers", type=int, help="Processos paralelos do sweep")
    parser.add_argument("--trace-file", dest="trace_file", help="Traço JSON (modo bounds)")
    parser.add_argument("--measurement-file", dest="measurement_file", help="Medição JSON (modo bounds)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("mode", "config")}

    t0 = time.time()
    try:
        cfg = load_run_config(args.mode, args.config, overrides)
        print(f"[INFO] Modo: {cfg.mode}")
        print(f"[INFO] Config: {cfg.config_path or '(nenhum)'}")
        print(f"[INFO] Out dir: {cfg.out_dir}")
        result = RUNNERS[cfg.mode](cfg)
    except VoltboundError as e:
        print(f"[ERRO] {type(e).__name__}: {e}")
        return e.exit_code

    print(f"\n[OK] Finalizado em {fmt_elapsed(time.time() - t0)}.")
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
