"""Walk through the kinematic chain of the bundled vehicle-manipulator model."""
import numpy as np

from uvms_ppc import kinematics as kin
from uvms_ppc.models import load_model

np.set_printoptions(precision=4, suppress=True)

model = load_model()
km = model.kinematics
q = np.array([0.0, 0.0, 0.0, 0.2, 0.2, -0.2, 0.0, -0.4, 0.8, -0.4])

p_e, R_e = kin.forward_kinematics(q, km)
print("end-effector position (NED):", p_e)
print("end-effector rpy:", kin.euler_from_rotation(R_e))

js = kin.jacobian_set(q, km)
print("geometric Jacobian, shape", js.Jg.shape)
print(js.Jg)
print("analytical Jacobian rank:", np.linalg.matrix_rank(js.J))

# a task velocity pushing the end-effector forward
x_dot = np.array([0.05, 0, 0, 0, 0, 0])
zeta = kin.nullspace_projected_velocity(js.J, x_dot)
print("minimum-norm velocities:", zeta)
print("vehicle surge share of the motion: %.2f" % (zeta[0] / (js.J @ zeta)[0]))

# the same task with the arm asked to fold the elbow in the null space
zeta2 = kin.nullspace_projected_velocity(js.J, x_dot, np.eye(10)[8] * 0.2)
print("with a secondary elbow motion:", zeta2)
print("task residual:", np.abs(js.J @ zeta2 - x_dot).max())
