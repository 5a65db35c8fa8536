"""How many cots does each unit need to turn away at most 5% of babies?"""

# %%
from lossnet import bundled_config_path, parse_config
from lossnet.planner import min_cots

units = parse_config(bundled_config_path()).models()

# %%
for unit in units:
    plan = min_cots(unit, target=0.05)
    print(f"{unit.name:12s} {unit.cots} -> {plan.cots}  R={[round(r, 4) for r in plan.achieved]}")

# %%
# Tighter targets for Chase Farm
chase = units[-1]
for target in (0.1, 0.05, 0.02, 0.01):
    print(target, min_cots(chase, target).cots[0])
