"""Compare the compiled rank kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--ns 50,200,1000] [--repeat 5] [--json out.json]

Kernel rows call both implementations side by side. The end-to-end rows
time ``r_estimate`` in a child process per backend, since the backend is
fixed when ``rankme`` is imported (``RANKME_PURE_PYTHON=1`` forces numpy).
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from rankme._backend import available_backends
from rankme.scores import WILCOXON, approximate_scores


def _best(fn, repeat: int) -> float:
    """Best per-call time in seconds over ``repeat`` timing rounds."""
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def _problem(n: int, seed: int = 0):
    r = np.random.default_rng(seed)
    w = r.uniform(-3, 9, n)
    y = 1 + 2 * w + r.logistic(size=n)
    a = approximate_scores(WILCOXON, n).values
    return w, y, a


def kernel_rows(ns, repeat):
    backends = available_backends()
    rows = []
    for n in ns:
        w, y, a = _problem(n)
        resid = y - 2 * w
        W = np.ascontiguousarray(w.reshape(-1, 1))
        Wc = np.ascontiguousarray(W - W.mean(axis=0))
        b = np.array([2.0])
        cases = {
            "dispersion": lambda k: k.dispersion(resid, a),
            "dispersion_at": lambda k: k.dispersion_at(W, y, b, a),
            "rank_statistic": lambda k: k.rank_statistic(Wc, resid, a),
            "line_search": lambda k: k.line_search(w, y, a, 0.0, 4.0, 1e-10, 400),
            "lad_line": lambda k: k.lad_line(w, y, 0.0, 4.0, 1e-10, 400),
        }
        for name, call in cases.items():
            row = {"kernel": name, "n": n}
            for label, mod in backends.items():
                row[label] = _best(lambda mod=mod: call(mod), repeat)
            rows.append(row)
    return rows


_CHILD = r"""
import json, sys, timeit
import numpy as np
from rankme import BACKEND, r_estimate
from rankme.rankcore import Sample
out = {"backend": BACKEND}
for n in json.loads(sys.argv[1]):
    r = np.random.default_rng(1)
    for p in (1, 2):
        W = r.uniform(-3, 9, (n, p))
        s = Sample(W, 1 + W @ np.full(p, 2.0) + r.logistic(size=n))
        t = timeit.Timer(lambda: r_estimate(s))
        number, _ = t.autorange()
        out[f"{n}/{p}"] = min(t.repeat(repeat=int(sys.argv[2]), number=number)) / number
print(json.dumps(out))
"""


def end_to_end_rows(ns, repeat):
    results = {}
    for label, env_extra in (("cython", {}), ("python", {"RANKME_PURE_PYTHON": "1"})):
        env = dict(os.environ, **env_extra)
        env.pop("RANKME_PURE_PYTHON", None) if not env_extra else None
        proc = subprocess.run(
            [sys.executable, "-c", _CHILD, json.dumps(list(ns)), str(repeat)],
            capture_output=True, text=True, env=env, check=True,
        )
        data = json.loads(proc.stdout)
        if data.pop("backend") != label:
            continue  # extension not built
        results[label] = data
    rows = []
    for key in results.get("python", {}):
        n, p = key.split("/")
        row = {"kernel": f"r_estimate p={p}", "n": int(n)}
        for label in results:
            row[label] = results[label][key]
        rows.append(row)
    return rows


def _fmt_time(t):
    if t is None:
        return "-"
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6)):
        if t >= scale:
            return f"{t / scale:.3g} {unit}"
    return f"{t / 1e-9:.3g} ns"


def print_table(rows):
    head = f"{'kernel':<20}{'n':>6}{'cython':>12}{'numpy':>12}{'speedup':>9}"
    print(head)
    print("-" * len(head))
    for row in rows:
        c, p = row.get("cython"), row.get("python")
        speed = f"{p / c:.1f}x" if c and p else "-"
        print(f"{row['kernel']:<20}{row['n']:>6}{_fmt_time(c):>12}{_fmt_time(p):>12}{speed:>9}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="50,200,1000")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows to this file")
    ap.add_argument("--skip-e2e", action="store_true", help="kernel rows only")
    args = ap.parse_args(argv)
    ns = [int(x) for x in args.ns.split(",")]
    rows = kernel_rows(ns, args.repeat)
    if not args.skip_e2e:
        rows += end_to_end_rows(ns, args.repeat)
    print_table(rows)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
