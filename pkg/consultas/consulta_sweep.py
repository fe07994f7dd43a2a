#!/usr/bin/env python3
# consulta_sweep.py
# Auditoria do sweep por par de condutividades (lê o sweep.parquet do voltbound).
# Uso:
#   python consultas/consulta_sweep.py --parquet exports/sweep_camadas/sweep.parquet
#   (opcional) --out auditoria.csv  -> exporta o resumo (;, UTF-8 com BOM)
#   (opcional) --tol 1e-8           -> folga das comparações

import argparse
import os
import time

import duckdb

AUDIT_SQL = """
  SELECT
    pair,
    COUNT(*)                                                    AS linhas,
    SUM(CASE WHEN status <> 'ok' THEN 1 ELSE 0 END)             AS falhas,
    SUM(CASE WHEN f_el > f_tilde_el + {tol}
              OR f_tilde_el > f1 + {tol}
              OR f1 > f_tilde_eu + {tol}
              OR f_tilde_eu > f_eu + {tol} THEN 1 ELSE 0 END)   AS violacoes_ordem,
    SUM(CASE WHEN f1 < inf_A - {tol} OR f1 > sup_A + {tol}
              OR f1 < inf_A_tilde - {tol} OR f1 > sup_A_tilde + {tol}
             THEN 1 ELSE 0 END)                                 AS f1_fora,
    MAX(ABS(inf_A - f_el))                                      AS max_dif_inf_A,
    MAX(ABS(sup_A - f_eu))                                      AS max_dif_sup_A,
    MIN(f_tilde_el_norm)                                        AS min_f_tilde_el_norm,
    MAX(f_tilde_eu_norm)                                        AS max_f_tilde_eu_norm
  FROM read_parquet('{path}')
  GROUP BY pair
  ORDER BY pair
"""


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Audita o sweep do voltbound (ordem dos limites e pertinência de f1).")
    ap.add_argument("--parquet", required=True, help="Caminho do sweep.parquet.")
    ap.add_argument("--out", default="", help="CSV de saída do resumo (opcional).")
    ap.add_argument("--tol", type=float, default=1e-8, help="Folga das comparações (padrão: 1e-8).")
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    path = os.path.abspath(args.parquet).replace("\\", "/")
    if not os.path.isfile(path):
        raise SystemExit(f"❌ Arquivo não encontrado: {path}")

    print("▶️  Auditando sweep…")
    print(f"   • Parquet   : {path}")
    print(f"   • Tolerância: {args.tol:g}")

    con = duckdb.connect(database=":memory:")
    df = con.execute(AUDIT_SQL.format(path=path, tol=repr(args.tol))).df()
    con.close()

    print("📊 Resultado")
    for r in df.itertuples(index=False):
        print(f"   • par {r.pair:<6} linhas={r.linhas}  falhas={r.falhas}  ordem={r.violacoes_ordem}  "
              f"f1_fora={r.f1_fora}  |inf A − f_el|={r.max_dif_inf_A:.2e}  |sup A − f_eu|={r.max_dif_sup_A:.2e}")

    if args.out:
        df.to_csv(args.out, sep=";", index=False, encoding="utf-8-sig", float_format="%.17g")
        print(f"   • CSV       : {args.out}")

    problemas = int(df["falhas"].sum() + df["violacoes_ordem"].sum() + df["f1_fora"].sum())
    dt = time.perf_counter() - t0
    mm, ss = divmod(int(dt), 60)
    print("✅ Concluído." if problemas == 0 else f"⚠️  Concluído com {problemas} ocorrência(s).")
    print(f"   • Tempo decorrido     : {mm:02d}:{ss:02d} (mm:ss)")
    return 1 if problemas else 0


if __name__ == "__main__":
    raise SystemExit(main())
