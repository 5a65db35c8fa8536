"""A single neonatal unit as a loss system.

Chase Farm has 10 SCBU cots, babies arrive every 1.05 days on average and
stay 8.03 days. With Poisson arrivals the two-moment model is Erlang B.
"""

# %%
from lossnet import erlang2, erlang_b, exponential, hyper2, rejection_single

arrival, los = exponential(1.05), exponential(8.03)
print("M/M/10/0   ", round(rejection_single(arrival, los, 10), 4))
print("Erlang B   ", round(erlang_b(10, 8.03 / 1.05), 4))

# %%
# LOS shape does not matter while arrivals are Poisson.
for stay in (exponential(8.03), erlang2(8.03), hyper2(8.03, 4.0)):
    print(stay.label(), rejection_single(arrival, stay, 10))

# %%
# Arrival shape does matter. Simulated rejection rises with the arrival scv,
# while the two-moment figure moves the other way.
from lossnet import Level, Stream, UnitModel, simulate_unit

for arr in (erlang2(1.05), exponential(1.05), hyper2(1.05, 2.0), hyper2(1.05, 4.0)):
    unit = UnitModel("Chase Farm", Level.L1, (10, 0, 0), [Stream(arr, los)])
    sim = simulate_unit(unit, horizon=20_000, warmup=500, reps=8, seed=3)
    print(f"{arr.label()} scv={arr.scv:<4} model {rejection_single(arr, los, 10):.4f}"
          f"  simulated {sim.rejection[0]:.4f} +/- {sim.rejection_half_width[0]:.4f}")

# %%
# Rejection against cot count
for c in range(8, 15):
    print(c, round(rejection_single(arrival, los, c), 4))
