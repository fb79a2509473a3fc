"""
Sweeps, fits and the command line
=================================

Experiments are described by a config that round-trips through JSON; every
output row carries enough of it to be recomputed.  The same runs are
available as ``latcurrent {current,sweep,lyapunov,integral,spectrum,validate}``,
for example::

    latcurrent sweep --beta 1 --Ns 20:200:20 --no-timing --out sweep.csv
    latcurrent lyapunov --potential '{"kind": "anderson", "support": [-1, 1]}' \\
        --energies -3:3:0.1 --samples 5
    latcurrent validate
"""

from latcurrent import CouplingSpec, ExperimentConfig, PotentialSpec, run_sweep, validate
from latcurrent.experiments import records_to_csv

cfg = ExperimentConfig(couplings=CouplingSpec(1, 0, 0, 1, 1.0), Ns=(20, 40, 80, 160),
                       timing=False)
res = run_sweep(cfg)
print(records_to_csv(res.records))
print(res.summary())

###############################################################################
# Anderson disorder without dephasing: the exponential fit wins.

cfg = ExperimentConfig(potential=PotentialSpec.bernoulli(1.0, seed=3), Ns=(10, 20, 30, 40),
                       realizations=20, timing=False)
res = run_sweep(cfg)
print("exponential R^2", res.exponential.r_squared, "rate", res.exponential.slope)

###############################################################################
# The built-in cross-method suite.

for check in validate():
    print(check.line())
