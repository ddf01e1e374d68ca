"""
The training energy and the evaluation metrics
==============================================

The energy needs no ground truth; the metrics do. The data term is a first-order
expansion of brightness constancy, so with motion of several pixels its
minimum drifts away from the true flow: here half the true motion already
scores lower than the true motion itself.
"""

import numpy as np

from fractalflow.data import FlowField, make_phantom_pair
from fractalflow.energy import EnergyWeights, total_energy
from fractalflow.metrics import evaluate

frame1, frame2, gt = make_phantom_pair(64)
weights = EnergyWeights(lambda1=0.2, lambda2=0.8, lambda_tv=1e-5)

for label, flow in [("zero flow", FlowField.zeros(64, 64)), ("true flow", gt), ("half flow", gt.scaled(0.5))]:
    e = total_energy(frame1.values, frame2.values, flow.to_tensor(), weights).as_floats()
    m = evaluate(flow, gt)
    print(f"{label:10s} energy {e['total_loss']:.3e}  (L1 {e['data_l1']:.2e}, L2 {e['data_l2']:.2e}, TV {e['tv']:.2e})"
          f"  AEE {m.aee:.3f} px  AAE {m.aae:.2f} deg")

# the angular error uses (u, v, 1), so perpendicular unit vectors are 60 degrees apart
one, zero = np.ones((1, 1)), np.zeros((1, 1))
print("AAE of (1,0) vs (0,1):", evaluate(FlowField(one, zero), FlowField(zero, one)).aae)
