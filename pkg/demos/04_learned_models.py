"""Certify a policy against a model learned from rollouts, not the truth.

Episodes of the nonlinear cart-pole under random inputs are regressed onto
a linear model; bootstrap refits give elementwise error boxes that enter
certification as a gain bound on the uncertainty channel.  With enough
episodes the certified level approaches the one computed from the true
linearization.
"""

import numpy as np

from loopcert import certify, policysynth, sysid
from loopcert.plant import cartpole_linearized, cartpole_nonlinear

true_plant = cartpole_linearized()
simulator = cartpole_nonlinear()
_, lqr_k = policysynth.dare_solve(true_plant.a, true_plant.b, np.eye(4), [[1.0]])
config = policysynth.CloneConfig(box_radius=(1.0, 1.0, 0.25, 0.6),
                                 n_samples=4000, steps=3000, seed=7)
policy = policysynth.behavior_clone(lqr_k, config).net

x_limit = 0.005  # pole angle limit, radians
w_true = certify.frontier(true_plant, policy, -lqr_k, x_lim_values=[x_limit],
                          tol=1e-3, target_state=2)[0][1]
print(f"true linearization: certified level {w_true:.6f} rad at |angle| <= {x_limit}")

for n_episodes in (10, 100):
    episodes = sysid.collect(simulator, n_episodes, ep_len=30, u_amplitude=0.5, seed=1)
    model = sysid.bootstrap_uncertainty(episodes, n_boot=100, seed=1)
    print(f"\nN = {n_episodes} episodes: largest model-error box entry "
          f"{np.max(model.gamma_delta):.2e}")
    learned = sysid.uncertain_plant(model, c=simulator.c, d_w=simulator.d_w,
                                    b_w=simulator.b_w)
    limited = certify.with_state_limit(learned, 2, x_limit)

    def certifies(w, limited=limited, model=model):
        return certify.algorithm1(limited, policy, -lqr_k, model.gamma_delta,
                                  w_inf=w).success

    w_learned = certify.bisect_max_level(certifies, 1e-3)
    print(f"  certified level on the learned model: {w_learned:.6f} rad "
          f"({100 * w_learned / w_true:.0f}% of the true-model level)")
