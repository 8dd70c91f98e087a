"""Run outputs: CSV traces, key/value reports, and SVG line charts.

The CSV is the numeric contract: one row per simulation step, a stable
documented column order, and every value printed with 17 significant
digits so parsing an emitted file reproduces the trace numerics to full
precision. The report is human-oriented structured text (`key: value`
lines). The SVG writer is dependency-free — plotting is a convenience,
the CSV is the record.

CSV columns, in order (suffixes are 1-based indices):

    time_s,
    F_MW_<line>..., T_C_<line>...,
    T_limit_C_<line>..., tightened_T_limit_C_<line>...,
    u_batt_MW, E_MWh,
    curtail_MW_<site>...,
    u_star_<channel>..., kappa_<channel>...,
    qp_status, margin

Row k holds the measured state at step k together with the plan and the
applied control computed at step k. `curtail_MW` is the cumulative
curtailment depth at each site. Free runs carry NaN in the tightened
limit and `u_star` columns and `qp_status` "free".
"""

import csv
import io

import numpy as np

_FMT = "%.17g"


def _f(x):
    return _FMT % float(x)


def csv_header(n_lines, n_sites):
    n_u = 1 + n_sites
    cols = ["time_s"]
    cols += [f"F_MW_{i + 1}" for i in range(n_lines)]
    cols += [f"T_C_{i + 1}" for i in range(n_lines)]
    cols += [f"T_limit_C_{i + 1}" for i in range(n_lines)]
    cols += [f"tightened_T_limit_C_{i + 1}" for i in range(n_lines)]
    cols += ["u_batt_MW", "E_MWh"]
    cols += [f"curtail_MW_{i + 1}" for i in range(n_sites)]
    cols += [f"u_star_{i + 1}" for i in range(n_u)]
    cols += [f"kappa_{i + 1}" for i in range(n_u)]
    cols += ["qp_status", "margin"]
    return cols


def write_csv(path, trace, T_limit_C, tightened_T_limit_C=None):
    """Write one row per step; see the module docstring for the order."""
    n_l = trace.F_MW.shape[1]
    n_g = trace.l_curt_MW.shape[1]
    n_u = trace.kappa.shape[1] if trace.kappa.size else 1 + n_g
    T_lim = np.broadcast_to(np.asarray(T_limit_C, dtype=float), (n_l,))
    T_tight = (np.full(n_l, np.nan) if tightened_T_limit_C is None
               else np.broadcast_to(
                   np.asarray(tightened_T_limit_C, dtype=float), (n_l,)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(n_l, n_g))
    for k in range(trace.steps):
        row = [_f(trace.t_s[k])]
        row += [_f(v) for v in trace.F_MW[k]]
        row += [_f(v) for v in trace.T_C[k]]
        row += [_f(v) for v in T_lim]
        row += [_f(v) for v in T_tight]
        row += [_f(trace.u_batt_MW[k]), _f(trace.E_MWh[k])]
        row += [_f(v) for v in trace.l_curt_MW[k]]
        row += [_f(v) for v in trace.u0_star[k]]
        row += [_f(v) for v in trace.kappa[k]]
        row += [trace.qp_status[k], _f(trace.margin[k])]
        w.writerow(row)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path):
    """Parse an emitted CSV back into {column name: array}.

    Numeric columns come back as float arrays (full precision);
    `qp_status` stays a tuple of strings.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty CSV file")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        if name == "qp_status":
            out[name] = tuple(col)
        else:
            out[name] = np.array([float(v) for v in col])
    return out


def format_report(items):
    """Structured text report: one `key: value` line per item.

    Floats are printed with shortest round-trip repr; everything else
    with str().
    """
    lines = []
    for key, value in items:
        if isinstance(value, (float, np.floating)):
            text = repr(float(value))
        else:
            text = str(value)
        lines.append(f"{key}: {text}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ SVG

_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b")


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span <= 0:
        span = 1.0
    return out_lo + (np.asarray(vals, dtype=float) - lo) * (
        (out_hi - out_lo) / span)


class _Panel:
    """One line-chart panel of the SVG document."""

    def __init__(self, x0, y0, width, height, title, unit):
        self.x0, self.y0 = x0, y0
        self.w, self.h = width, height
        self.title, self.unit = title, unit
        self.series = []          # (label, t, y, color, dash)

    def add(self, label, t, y, color, dash=None):
        self.series.append((label, np.asarray(t, dtype=float),
                            np.asarray(y, dtype=float), color, dash))

    def render(self, parts):
        ys = np.concatenate([s[2] for s in self.series]) if self.series \
            else np.array([0.0, 1.0])
        ys = ys[np.isfinite(ys)]
        if ys.size == 0:
            ys = np.array([0.0, 1.0])
        pad = 0.05 * max(ys.max() - ys.min(), 1e-9)
        lo, hi = ys.min() - pad, ys.max() + pad
        ts = np.concatenate([s[1] for s in self.series]) if self.series \
            else np.array([0.0, 1.0])
        t_lo, t_hi = float(ts.min()), float(max(ts.max(), ts.min() + 1e-9))
        px0, px1 = self.x0 + 52, self.x0 + self.w - 12
        py0, py1 = self.y0 + 26, self.y0 + self.h - 24

        parts.append(
            f'<rect x="{px0}" y="{py0}" width="{px1 - px0}" '
            f'height="{py1 - py0}" fill="none" stroke="#888"/>')
        parts.append(
            f'<text x="{self.x0 + 52}" y="{self.y0 + 16}" '
            f'font-size="13" fill="#222">{self.title}</text>')
        # axis extremes
        for val, y in ((lo, py1), (hi, py0)):
            parts.append(
                f'<text x="{px0 - 6}" y="{y + 4:.2f}" font-size="10" '
                f'fill="#444" text-anchor="end">{val:.4g}</text>')
        for val, x in ((t_lo, px0), (t_hi, px1)):
            parts.append(
                f'<text x="{x:.2f}" y="{py1 + 14}" font-size="10" '
                f'fill="#444" text-anchor="middle">{val:.4g}</text>')
        parts.append(
            f'<text x="{px1}" y="{self.y0 + 16}" font-size="10" '
            f'fill="#444" text-anchor="end">{self.unit}, vs time_s</text>')

        legend_x = px0 + 6
        for label, t, y, color, dash in self.series:
            keep = np.isfinite(y)
            if keep.sum() >= 2:
                xs = _scale(t[keep], t_lo, t_hi, px0, px1)
                yy = _scale(y[keep], lo, hi, py1, py0)
                pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, yy))
                extra = f' stroke-dasharray="{dash}"' if dash else ""
                parts.append(
                    f'<polyline points="{pts}" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"{extra}/>')
            parts.append(
                f'<text x="{legend_x}" y="{py0 + 14}" font-size="10" '
                f'fill="{color}">{label}</text>')
            legend_x += 8 * max(len(label), 4)


def write_svg(path, trace, T_limit_C, tightened_T_limit_C=None):
    """Two stacked charts: temperatures vs limits, controls vs time.

    Hand-written SVG, no plotting dependency.
    """
    n_l = trace.T_C.shape[1]
    n_g = trace.l_curt_MW.shape[1]
    t = trace.t_s
    T_lim = np.broadcast_to(np.asarray(T_limit_C, dtype=float), (n_l,))

    top = _Panel(0, 0, 800, 270, "conductor temperature", "°C")
    for i in range(n_l):
        top.add(f"line {i + 1}", t, trace.T_C[:, i],
                _PALETTE[i % len(_PALETTE)])
    top.add("limit", t, np.full(len(t), float(T_lim.max())), "#000",
            dash="6,3")
    if tightened_T_limit_C is not None:
        tt = np.broadcast_to(np.asarray(tightened_T_limit_C, dtype=float),
                             (n_l,))
        top.add("tightened", t, np.full(len(t), float(tt.min())), "#666",
                dash="2,3")

    bottom = _Panel(0, 280, 800, 270, "controls", "MW")
    bottom.add("battery", t, trace.u_batt_MW, _PALETTE[4])
    for i in range(n_g):
        bottom.add(f"curtail {i + 1}", t, trace.l_curt_MW[:, i],
                   _PALETTE[(2 + i) % len(_PALETTE)])

    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="800" '
             'height="560" viewBox="0 0 800 560">',
             '<rect width="800" height="560" fill="#fff"/>']
    top.render(parts)
    bottom.render(parts)
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
