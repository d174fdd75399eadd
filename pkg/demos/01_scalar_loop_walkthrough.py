"""Walk through every certification ingredient on a one-dimensional loop.

The plant is x[t+1] = 0.5 x[t] + u[t] + w[t] with y = x, driven by the
linear policy u = -0.2 y and a persistent perturbation |w[t]| <= 0.1.
Everything has a closed form here, so each number the library produces can
be checked by eye.
"""

import numpy as np

from loopcert import attack, certify, linsys, neural

plant = linsys.make_plant([[0.5]], [[1.0]], b_w=[[1.0]], w_inf=0.1)
policy = neural.mlp([(np.array([[-0.2]]), np.array([0.0]))])

print("== transfer matrices ==")
maps = linsys.close_loop(plant, np.zeros((1, 1)))  # open loop: rho(A) = 0.5
print(f"open-loop  ||y<-u||_L1 = {linsys.l1_norm(maps.yu):.6f}   (geometric series: 2)")
print(f"open-loop  ||y<-w||_L1 = {linsys.l1_norm(maps.yw):.6f}")

print("\n== small-gain baseline ==")
baseline = certify.check_lemma1(maps, gamma_pi=0.4, gamma_delta=0.0,
                                w_inf=0.1, y_inf=1.0)
print(f"beta2 = {baseline.beta2:.3f} -> implied |y| <= {baseline.y_inf_implied:.3f}, "
      f"certified: {baseline.certified}")

print("\n== closed-form invariant box from the baseline norms ==")
quad = certify.constructive_quadruplet(maps, 0.4, 0.0, 0.1)
holds, x_bar = certify.check_theorem1(maps, quad, [0.1])
print(f"y_bar = {quad.y_bar[0]:.6f}, u_bar = {quad.u_bar[0]:.6f}, "
      f"feedback check holds: {holds}, x_bar = {x_bar[0]:.6f}")

print("\n== invariant-set iteration on the actual policy ==")
result = certify.algorithm1(plant, policy)
quad = result.quadruplet
print(f"success in {result.iterations} passes: "
      f"x_bar = {quad.x_bar[0]:.6f} (closed form 0.1/0.7 = {0.1 / 0.7:.6f})")

print("\n== frontier: the largest certifiable level is 0.7 * x_lim ==")
for x_lim, w_star in certify.frontier(plant, policy, x_lim_values=[0.5, 1.0, 2.0],
                                      tol=1e-5, target_state=0):
    print(f"  x_lim = {x_lim:3.1f} -> w* = {w_star:.6f}  (0.7 x_lim = {0.7 * x_lim:.6f})")

print("\n== the designed attack meets the certified bound ==")
closed = linsys.close_loop(plant, result.gain)
plan = attack.design_attack(closed, target=0, horizon=80, w_inf=0.1)
trace = attack.simulate(plant, policy, plan, 81)
print(f"achieved |x| = {trace.max_abs('x')[0]:.6f} vs certified {quad.x_bar[0]:.6f}")
