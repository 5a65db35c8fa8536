"""Level 3/2 units, where NICU and SCBU babies overflow into each other's cots.

The approximate steady state is a product of two single-chain weights over a
state space that records who occupies which pool.
"""

# %%
from lossnet import bundled_config_path, parse_config
from lossnet import network

units = {u.name: u for u in parse_config(bundled_config_path()).models()}
uclh = units["UCLH"]
print(uclh.cots, "->", network.state_count(*uclh.cots), "states")

# %%
for name in ("UCLH", "Barnet", "Whittington"):
    ev = network.evaluate(units[name])
    print(f"{name:12s} R={tuple(round(x, 4) for x in ev.rejection)} O={tuple(round(x, 4) for x in ev.overflow)}")

# %%
# With exponential inputs the weights are Poisson terms; both routes agree.
a = network.evaluate_level32(uclh)
b = network.markovian_closed_form(uclh)
print(max(abs(x - y) for x, y in zip(a.rejection + a.overflow, b.rejection + b.overflow)))

# %%
# A few more TC cots for UCLH
for c3 in range(8, 13):
    ev = network.evaluate(uclh.with_cots((17, 12, c3)))
    print(c3, [round(x, 4) for x in ev.rejection])
