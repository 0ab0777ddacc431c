"""Run the whole pipeline on a generated fixture and read the report."""

import json
import sys
import tempfile
from pathlib import Path

from perspectives.pipeline import RunConfig, full_pipeline
from perspectives.synthetic import write_planted_fixture

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
config = write_planted_fixture(work, n_items=600, seed=0)
print("fixture written to", work)

# ----------------------------------------------------------------------
# Search mode: the split is discovered from the annotations

res = full_pipeline(RunConfig.load(config))
print((res.output_dir / "report.txt").read_text())

# ----------------------------------------------------------------------
# Artifacts and their hashes

manifest = json.loads((res.output_dir / "manifest.json").read_text())
for name, digest in sorted(manifest["artifacts"].items()):
    print(f"{digest[:12]}  {name}")

# ----------------------------------------------------------------------
# Recall on the union of both perspectives' positives

for name, r in res.union_metrics.items():
    print(f"{name:10s} recall_pos={r.recall_pos:.3f} precision_pos={r.precision_pos:.3f}")
