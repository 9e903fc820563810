"""Deterministic text/CSV emission shared by the CLI.

All numbers are printed with 12 significant digits; nothing time- or
path-dependent goes into an output file, so identical manifests reproduce
identical bytes.
"""

import json

from .regions import subset_mask


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def csv_lines(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return lines


BOUNDS_COLUMNS = (
    "n", "d_max", "alpha", "S", "gamma", "lambda", "zeta", "eps",
    "converse_rhs", "mi_sliced", "mi_cyclic", "gap", "pass",
)


def bounds_csv(reports):
    rows = [
        (
            r.n, r.d_max, r.edge_width, subset_mask(r.subset), r.tail, r.edge, r.cross,
            r.gap_tol, r.outer_rate, r.mi_sliced, r.mi_cyclic, r.gap, r.passed,
        )
        for r in reports
    ]
    return csv_lines(BOUNDS_COLUMNS, rows)


def char_table_csv(rows):
    return csv_lines(("i", "exact", "bound"), rows)


def offsets_key(offsets):
    return ":".join(str(d) for d in offsets)


def trials_csv(trial_reports):
    header = ("offsets", "trial", "relay_block_errors", "dest_block_errors",
              "sw_block_errors", "overall")
    rows = []
    counter = {}
    for r in trial_reports:
        key = offsets_key(r.offsets)
        idx = counter.get(key, 0)
        counter[key] = idx + 1
        rows.append((
            key, idx,
            "".join("1" if e else "0" for e in r.relay_block_errors),
            "".join("1" if e else "0" for e in r.dest_block_errors),
            "".join("1" if e else "0" for e in r.sw_block_errors),
            r.overall_error,
        ))
    return csv_lines(header, rows)


def summary_csv(report):
    header = ("offsets", "trials", "errors", "p_hat", "ci_lo", "ci_hi",
              "relay_errors", "dest_errors", "sw_errors", "headline")
    rows = []
    for p in report.profiles:
        rows.append((
            offsets_key(p.offsets), p.trials, p.errors, p.p_hat, p.ci_lo, p.ci_hi,
            p.relay_errors, p.dest_errors, p.sw_errors, p is report.headline,
        ))
    return csv_lines(header, rows)


def region_text(region):
    lines = list(region.to_text_lines())
    if region.note:
        lines.append(f"# note: {region.note}")
    return lines


def write_lines(path, lines):
    with open(path, "w") as f:
        f.write("\n".join(lines))
        f.write("\n")


def write_json(path, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")
