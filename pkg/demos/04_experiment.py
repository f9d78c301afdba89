"""A repeated identification experiment end to end.

Writes a small synthetic dataset in the HAPT raw-data layout, then runs the
same harness that produces the tables on the real data: random volunteer
subsets, per-period tuning, an 80/20 split of cycles, archetype clustering,
nearest-archetype labelling and macro-averaged metrics.

Pass a directory holding the real HAPT download as the first argument to
run on it instead.
"""

import sys
import tempfile

from gaitcut.evaluation import ExperimentConfig, run_experiment
from gaitcut.synthetic import write_synthetic_hapt

if len(sys.argv) > 1:
    root = sys.argv[1]
    classes = 6
else:
    root = tempfile.mkdtemp(prefix="gaitcut-demo-")
    write_synthetic_hapt(root, n_users=8, periods_per_user=2, cycles_per_period=12, seed=1)
    classes = 5
    print(f"synthetic dataset in {root}")

for channels in ("x", "3axis"):
    cfg = ExperimentConfig(n_classes=classes, channels=channels, repetitions=5, seed=0)
    report = run_experiment(cfg, root, jobs=2)
    print(f"\n{classes}-class, {channels} accelerometer, walking")
    print(report.summary_table(), end="")

binary = run_experiment(ExperimentConfig(n_classes=classes, channels="3axis", binary=True, repetitions=5), root)
print("\nbinary user-vs-adversary, 3-axis")
print(binary.summary_table(), end="")
print("\nconfusion matrix of the first repetition:")
print(binary.repetitions[0].labels)
print(binary.repetitions[0].confusion)
