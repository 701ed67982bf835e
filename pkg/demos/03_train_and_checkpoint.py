"""Train, checkpoint, and restore: the full training artifact cycle.

Training writes a config, per-epoch checkpoints, a final checkpoint,
and a CSV loss history into one directory. A checkpoint restores
bit-exactly into a freshly built model.
"""
import csv
import tempfile
from pathlib import Path

import numpy as np

import winnow
from winnow.checkpoint import apply_checkpoint, load_checkpoint
from winnow.train import train

out = Path(tempfile.mkdtemp(prefix="winnow_demo_"))

model = winnow.build_model(winnow.tiny_config(), seed=1)
history = train(model, epochs=2, seed=3, out_dir=out, mixtures_per_epoch=4)
print(f"trained {len(history)} steps; artifacts in {out}:")
for p in sorted(out.iterdir()):
    print(f"  {p.name:<16} {p.stat().st_size:>9,} bytes")

# the loss history is plain CSV, one row per optimization step
with open(out / "history.csv", newline="") as fh:
    rows = list(csv.reader(fh))
print(f"history: {rows[0]} ... {len(rows) - 1} rows")

# restore into a model built from the checkpoint's own embedded config
ckpt = load_checkpoint(out / "final.thln")
restored = winnow.build_model(winnow.ModelConfig.from_dict(ckpt.config), seed=0)
apply_checkpoint(restored, ckpt)

a = model.parameters()
b = restored.parameters()
exact = all(np.array_equal(a[k].data, b[k].data) for k in a)
print(f"restored weights bit-exact: {exact}")
