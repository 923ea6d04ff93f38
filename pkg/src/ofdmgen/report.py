"""CSV rendering of evaluation reports, for plotting and inspection."""

from __future__ import annotations

import csv
import os

import numpy as np

from .metrics import HIST_BINS, HIST_LIMIT, EvalReport

__all__ = ["hist_bin_centers", "write_report_csvs"]


def hist_bin_centers() -> np.ndarray:
    """Centers of the constellation histogram bins along one axis."""
    edges = np.linspace(-HIST_LIMIT, HIST_LIMIT, HIST_BINS + 1)
    return (edges[:-1] + edges[1:]) / 2


def _write_rows(path, header_row, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header_row:
            writer.writerow(header_row)
        writer.writerows(rows)


def write_report_csvs(report: EvalReport, out_dir) -> list[str]:
    """Write the PSD, constellation, coherence, and prefix-profile tables.

    Returns the list of files written.  Constellation CSVs are bare
    150x150 count matrices; rows follow the I axis from -1.5 to 1.5 and
    columns the Q axis.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    _write_rows(
        path("psd.csv"),
        ["freq_cycles_per_sample", "psd_target", "psd_gen"],
        zip(report.psd_freqs, report.psd_target, report.psd_gen),
    )

    for name, hist in (
        ("constellation_gen.csv", report.constellation_hist_gen),
        ("constellation_target.csv", report.constellation_hist_target),
    ):
        if hist is not None:
            _write_rows(path(name), None, np.asarray(hist, dtype=np.int64))

    if report.coherence_bw_gen is not None and report.coherence_bw_target is not None:
        both = np.concatenate([report.coherence_bw_gen, report.coherence_bw_target])
        edges = np.linspace(0.0, float(both.max()) or 1.0, 41)
        cg, _ = np.histogram(report.coherence_bw_gen, bins=edges)
        ct, _ = np.histogram(report.coherence_bw_target, bins=edges)
        _write_rows(
            path("coherence_bw.csv"),
            ["bin_left_hz", "bin_right_hz", "count_target", "count_gen"],
            zip(edges[:-1], edges[1:], ct, cg),
        )

    for name, prof in (
        ("cp_profile_gen.csv", report.cp_profile_gen),
        ("cp_profile_target.csv", report.cp_profile_target),
    ):
        if prof is not None:
            prof = np.asarray(prof)
            head = ["position"] + [f"symbol_{i}" for i in range(prof.shape[0])]
            rows = zip(range(prof.shape[1]), *prof)
            _write_rows(path(name), head, rows)

    return written
