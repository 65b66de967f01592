"""The four model variants collapse onto each other in the degenerate limits.

Zero velocity offset turns nonlocal ARZ into the first-order nonlocal
model; a vanishing kernel turns it into local ARZ; both together give LWR.
The named consistency experiment steps each pair with a shared time step
and reports the largest field difference.
"""

from nonlocal_arz.experiments import named_config, run_experiment

res = run_experiment(named_config("consistency"))
for label, c in res.checks.items():
    print(f"{label:45s} max gap {c['value']:.1e} over {c['steps']} steps")
print("status:", res.summary["status"])
