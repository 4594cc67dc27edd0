"""
A complete campaign with our own simulator
==========================================

Run the factorial experiment, fit an error model, check it at the baseline
and the two half-way diagonal points, and zoom in while the residuals are
large.  Then validate the accepted model on fresh points and write the
diagnostic charts.
"""

import sys
from pathlib import Path

from rrdoe import CampaignConfig, build_report, refine, render_report, residuals
from rrdoe.campaign import measure_validation, sample_validation_points
from rrdoe.render import KINDS

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "campaign-output")

config = CampaignConfig(reps=30, seed=0, refine_threshold=10.0, max_zooms=3)
outcome = refine(config)
for d in outcome.decisions:
    print(f"scale {d.scale:<6g} -> {d.action:6s} max |residual| {d.max_abs_residual:9.3f}")
print("converged:", outcome.converged, " final scale:", outcome.config.scale)

model = outcome.model
samples = sample_validation_points(20, seed=0)
measured = measure_validation(samples, outcome.config)
report = build_report(model, residuals(model, zip(measured.coded, measured.response)))
print(report.summary())

out_dir.mkdir(parents=True, exist_ok=True)
for kind in KINDS:
    svg, csv_bytes = render_report(report, kind)
    (out_dir / f"{kind}.svg").write_bytes(svg)
    (out_dir / f"{kind}.csv").write_bytes(csv_bytes)
print("charts written to", out_dir)
