#!/usr/bin/env python3
"""Regenerates the default hand models, calibration sets, baseline configs,
named poses and the sample sweep trajectory under data/.

All geometry here is invented. The human hand is laid out so that, at the
origin pose, its thumb/index/middle fingertips scaled by the fingertip-mapping
scale and rotated into the robot frame land exactly on the robot's origin
fingertips. Calibration extrema and the sweep stay inside span(A) so the
subspace round trip is exact on them.

Usage: python3 tools/make_default_data.py [out_dir]
"""

import json
import math
import os
import sys

import numpy as np
from scipy.optimize import least_squares

FINGERTIP_SCALE = 1.5

# human hand frame -> robot hand frame (cyclic axis permutation)
#   human x (distal)  -> robot z (approach)
#   human y           -> robot x (thumb towards fingers)
#   human z           -> robot y
HUMAN_TO_ROBOT = np.array([[0.0, 1.0, 0.0],
                           [0.0, 0.0, 1.0],
                           [1.0, 0.0, 0.0]])

# Finger frames: x points along the straight finger, flexion rotates about y
# and moves the tip towards -z, adduction rotates about z.
ROBOT_FINGER_FRAME = np.array([[0.0, 0.0, 1.0],   # columns: e_z, -e_y, e_x
                               [0.0, -1.0, 0.0],
                               [1.0, 0.0, 0.0]])
ROBOT_THUMB_FRAME = np.array([[0.0, 0.0, -1.0],   # columns: e_z, e_y, -e_x
                              [0.0, 1.0, 0.0],
                              [1.0, 0.0, 0.0]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def planar(lengths, angles):
    p = np.zeros(3)
    phi = 0.0
    for length, theta in zip(lengths, angles):
        phi += theta
        p += length * np.array([math.cos(phi), 0.0, -math.sin(phi)])
    return p


def fingertip(finger, q):
    ad = q[finger["adduction"]] if finger["adduction"] is not None else 0.0
    flex = [q[j] for j in finger["joints"]]
    return finger["base"] + finger["frame"] @ rot_z(ad) @ planar(finger["lengths"], flex)


def joint(name, lo, hi, axis):
    return {"name": name, "min": lo, "max": hi, "axis": axis}


# --- robot hand: three two-link fingers, joint order fixed by the method -----

ROBOT_JOINTS = [
    joint("f0_prox", -0.35, 1.5708, "sigma"),
    joint("f0_dis", -0.2, 1.5708, "epsilon"),
    joint("f1_ad", -0.6, 0.6, "alpha"),
    joint("f1_prox", -0.35, 1.5708, "sigma"),
    joint("f1_dis", -0.2, 1.5708, "epsilon"),
    joint("f2_ad", -0.6, 0.6, "alpha"),
    joint("f2_prox", -0.35, 1.5708, "sigma"),
    joint("f2_dis", -0.2, 1.5708, "epsilon"),
]
ROBOT_ORIGIN = [0.2, 0.3, 0.0, 0.2, 0.3, 0.0, 0.2, 0.3]
ROBOT_LINKS = [0.0865, 0.068]
ROBOT_FINGERS = [
    {"name": "f0", "base": np.array([-0.066, 0.0, 0.0]), "frame": ROBOT_THUMB_FRAME,
     "joints": [0, 1], "lengths": ROBOT_LINKS, "adduction": None},
    {"name": "f1", "base": np.array([0.066, 0.033, 0.0]), "frame": ROBOT_FINGER_FRAME,
     "joints": [3, 4], "lengths": ROBOT_LINKS, "adduction": 2},
    {"name": "f2", "base": np.array([0.066, -0.033, 0.0]), "frame": ROBOT_FINGER_FRAME,
     "joints": [6, 7], "lengths": ROBOT_LINKS, "adduction": 5},
]

# --- human hand: 16 glove-style joints ---------------------------------------

HUMAN_JOINTS = [
    joint("thumb_rotation", -0.5, 0.8, "none"),
    joint("thumb_adduction", -0.4, 1.2, "sigma"),      # sensor a
    joint("thumb_mcp", -0.2, 1.0, "epsilon"),
    joint("thumb_ip", -0.3, 1.3, "epsilon"),           # sensor b
    joint("index_mcp", -0.3, 1.6, "sigma"),            # sensor c
    joint("index_pip", 0.0, 1.9, "epsilon"),           # sensor d
    joint("middle_index_abduction", -0.35, 0.35, "alpha"),  # sensor e
    joint("middle_mcp", -0.3, 1.6, "sigma"),           # sensor f
    joint("middle_pip", 0.0, 1.9, "epsilon"),          # sensor g
    joint("ring_mcp", -0.3, 1.6, "sigma"),
    joint("ring_pip", 0.0, 1.9, "epsilon"),
    joint("ring_middle_abduction", -0.35, 0.35, "alpha"),
    joint("pinky_mcp", -0.3, 1.6, "sigma"),
    joint("pinky_pip", 0.0, 1.9, "epsilon"),
    joint("pinky_ring_abduction", -0.35, 0.35, "alpha"),
    joint("palm_arch", 0.0, 0.8, "none"),
]
HUMAN_INDEX = {j["name"]: i for i, j in enumerate(HUMAN_JOINTS)}
HUMAN_ORIGIN = [0.0, 0.3, 0.2, 0.2, 0.25, 0.3, 0.0, 0.25, 0.3,
                0.25, 0.3, 0.0, 0.25, 0.3, 0.0, 0.1]

H = HUMAN_INDEX
HUMAN_FINGERS = [
    {"name": "thumb", "frame": HUMAN_TO_ROBOT.T @ ROBOT_THUMB_FRAME,
     "joints": [H["thumb_adduction"], H["thumb_mcp"], H["thumb_ip"]],
     "lengths": [0.032, 0.034, 0.03], "adduction": H["thumb_rotation"], "robot": "f0"},
    {"name": "index", "frame": HUMAN_TO_ROBOT.T @ ROBOT_FINGER_FRAME,
     "joints": [H["index_mcp"], H["index_pip"]],
     "lengths": [0.055, 0.045], "adduction": H["middle_index_abduction"], "robot": "f1"},
    {"name": "middle", "frame": HUMAN_TO_ROBOT.T @ ROBOT_FINGER_FRAME,
     "joints": [H["middle_mcp"], H["middle_pip"]],
     "lengths": [0.058, 0.048], "adduction": None, "robot": "f2"},
    {"name": "ring", "frame": HUMAN_TO_ROBOT.T @ ROBOT_FINGER_FRAME,
     "joints": [H["ring_mcp"], H["ring_pip"]],
     "lengths": [0.054, 0.044], "adduction": H["ring_middle_abduction"], "robot": None},
    {"name": "pinky", "frame": HUMAN_TO_ROBOT.T @ ROBOT_FINGER_FRAME,
     "joints": [H["pinky_mcp"], H["pinky_pip"]],
     "lengths": [0.045, 0.035], "adduction": H["pinky_ring_abduction"], "robot": None},
]


def place_human_bases():
    robot_by_name = {f["name"]: f for f in ROBOT_FINGERS}
    for f in HUMAN_FINGERS:
        f["base"] = np.zeros(3)
        rel = fingertip(f, HUMAN_ORIGIN)
        if f["robot"] is not None:
            target = HUMAN_TO_ROBOT.T @ fingertip(robot_by_name[f["robot"]], ROBOT_ORIGIN)
            f["base"] = target / FINGERTIP_SCALE - rel
    # ring and pinky continue the row past the middle finger
    middle = HUMAN_FINGERS[2]["base"]
    step = HUMAN_FINGERS[2]["base"] - HUMAN_FINGERS[1]["base"]
    HUMAN_FINGERS[3]["base"] = middle + step * 0.9 - np.array([0.004, 0.0, 0.0])
    HUMAN_FINGERS[4]["base"] = middle + step * 1.8 - np.array([0.012, 0.0, 0.0])


def basis(joints, axis):
    return np.array([1.0 if j["axis"] == axis else 0.0 for j in joints])


def span_pose(joints, origin, c_alpha=0.0, c_sigma=0.0, c_epsilon=0.0):
    q = (np.array(origin) + c_alpha * basis(joints, "alpha")
         + c_sigma * basis(joints, "sigma") + c_epsilon * basis(joints, "epsilon"))
    for v, j in zip(q, joints):
        assert j["min"] <= v <= j["max"], (j["name"], v)
    return [float(v) for v in q]


# Extrema as offsets along the unnormalized psi columns. Both hands share the
# same min:max proportions so the composed map sends human extrema to robot
# extrema and never leaves the robot's joint limits.
HUMAN_EXTREMA = {"alpha": (-0.2, 0.3), "sigma": (-0.2, 0.8), "epsilon": (-0.15, 0.75)}
ROBOT_EXTREMA = {"alpha": (-0.3, 0.45), "sigma": (-0.3, 1.2), "epsilon": (-0.25, 1.25)}


def calibration_poses(joints, origin, ext):
    # one pose per extreme demonstration, grouped like the four demo poses
    return [
        (["sigma_max", "alpha_min"],
         span_pose(joints, origin, c_alpha=ext["alpha"][0], c_sigma=ext["sigma"][1])),
        (["alpha_max"], span_pose(joints, origin, c_alpha=ext["alpha"][1])),
        (["epsilon_min", "sigma_min"],
         span_pose(joints, origin, c_sigma=ext["sigma"][0], c_epsilon=ext["epsilon"][0])),
        (["epsilon_max"], span_pose(joints, origin, c_epsilon=ext["epsilon"][1])),
    ]


def model_doc(name, joints, fingers, origin, names):
    return {
        "name": name,
        "joints": joints,
        "fingers": [{
            "name": f["name"],
            "base_position": [float(v) for v in f["base"]],
            "base_orientation": [[float(v) for v in row] for row in f["frame"]],
            "joints": [names[j] for j in f["joints"]],
            "link_lengths": f["lengths"],
            "adduction_joint": None if f["adduction"] is None else names[f["adduction"]],
        } for f in fingers],
        "origin_pose": origin,
    }


def design_pinch(gap=0.012):
    """Human pinch whose scaled thumb/index tips are exactly reachable by the robot."""
    robot = {f["name"]: f for f in ROBOT_FINGERS}
    thumb, index = HUMAN_FINGERS[0], HUMAN_FINGERS[1]
    human_free = [H["thumb_adduction"], H["thumb_mcp"], H["thumb_ip"],
                  H["index_mcp"], H["index_pip"], H["middle_index_abduction"]]
    robot_free = [0, 1, 2, 3, 4]

    def split(x):
        q_h = np.array(HUMAN_ORIGIN, dtype=float)
        q_r = np.array(ROBOT_ORIGIN, dtype=float)
        q_h[human_free] = x[:len(human_free)]
        q_r[robot_free] = x[len(human_free):]
        return q_h, q_r

    def residual(x):
        q_h, q_r = split(x)
        h_thumb, h_index = fingertip(thumb, q_h), fingertip(index, q_h)
        r_thumb = HUMAN_TO_ROBOT.T @ fingertip(robot["f0"], q_r) / FINGERTIP_SCALE
        r_index = HUMAN_TO_ROBOT.T @ fingertip(robot["f1"], q_r) / FINGERTIP_SCALE
        return np.concatenate([r_thumb - h_thumb, r_index - h_index,
                               [np.linalg.norm(h_thumb - h_index) - gap]])

    x0 = np.concatenate([np.array(HUMAN_ORIGIN)[human_free] + [0.2, 0.2, 0.2, 0.2, 0.2, 0.1],
                         np.array(ROBOT_ORIGIN)[robot_free] + [0.1, 0.1, 0.2, 0.1, 0.1]])
    lo = [HUMAN_JOINTS[j]["min"] + 0.05 for j in human_free] + \
         [ROBOT_JOINTS[j]["min"] + 0.05 for j in robot_free]
    hi = [HUMAN_JOINTS[j]["max"] - 0.05 for j in human_free] + \
         [ROBOT_JOINTS[j]["max"] - 0.05 for j in robot_free]
    sol = least_squares(residual, x0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    q_h, _ = split(sol.x)
    return [float(v) for v in q_h], float(np.max(np.abs(residual(sol.x))))


def sweep(joints, origin, ext, samples=500, rate=100.0):
    waypoints = [
        (0.0, 0.0, 0.0),
        (ext["alpha"][0], ext["sigma"][1], 0.0),
        (0.0, 0.0, 0.0),
        (ext["alpha"][1], 0.0, 0.0),
        (0.0, 0.0, 0.0),
        (0.0, ext["sigma"][0], ext["epsilon"][0]),
        (0.0, 0.0, 0.0),
        (0.0, 0.0, ext["epsilon"][1]),
        (0.0, 0.0, 0.0),
    ]
    segments = len(waypoints) - 1
    rows = []
    for k in range(samples):
        s = k / (samples - 1) * segments
        i = min(int(s), segments - 1)
        u = s - i
        blend = 0.5 - 0.5 * math.cos(math.pi * u)
        c = [a + (b - a) * blend for a, b in zip(waypoints[i], waypoints[i + 1])]
        rows.append((k / rate, span_pose(joints, origin, *c)))
    return rows


def write_json(path, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out, exist_ok=True)
    place_human_bases()

    robot_names = [j["name"] for j in ROBOT_JOINTS]
    human_names = [j["name"] for j in HUMAN_JOINTS]
    write_json(os.path.join(out, "robot_default.model.json"),
               model_doc("robot_default", ROBOT_JOINTS, ROBOT_FINGERS, ROBOT_ORIGIN, robot_names))
    write_json(os.path.join(out, "human_default.model.json"),
               model_doc("human_default", HUMAN_JOINTS, HUMAN_FINGERS, HUMAN_ORIGIN, human_names))

    for name, joints, origin, ext in (("robot_default", ROBOT_JOINTS, ROBOT_ORIGIN, ROBOT_EXTREMA),
                                      ("human_default", HUMAN_JOINTS, HUMAN_ORIGIN, HUMAN_EXTREMA)):
        write_json(os.path.join(out, name + ".cal"), {
            "model_name": name,
            "poses": [{"labels": labels, "angles": q}
                      for labels, q in calibration_poses(joints, origin, ext)],
        })

    # Table I with the thumb remap: glove thumb adduction drives the robot
    # thumb's proximal joint. Offsets make the two origins correspond.
    table = [("thumb_adduction", "f0_prox"), ("thumb_ip", "f0_dis"),
             ("middle_index_abduction", "f1_ad"), ("index_mcp", "f1_prox"),
             ("index_pip", "f1_dis"), ("middle_index_abduction", "f2_ad"),
             ("middle_mcp", "f2_prox"), ("middle_pip", "f2_dis")]
    corr = []
    for m, s in table:
        gain = 1.0
        offset = ROBOT_ORIGIN[robot_names.index(s)] - gain * HUMAN_ORIGIN[H[m]]
        corr.append({"master": m, "slave": s, "gain": gain, "offset": offset})
    write_json(os.path.join(out, "correspondence.json"), corr)

    write_json(os.path.join(out, "fingertip.json"), {
        "scale": FINGERTIP_SCALE,
        "rotation": [[float(v) for v in row] for row in HUMAN_TO_ROBOT],
        "pairs": [["thumb", "f0"], ["index", "f1"], ["middle", "f2"]],
        "ik": {"damping": 0.01, "max_iterations": 200, "position_tolerance": 1e-6,
               "step_limit": 0.2},
    })

    pinch, err = design_pinch()
    if err > 1e-9:
        raise SystemExit(f"pinch design did not converge: {err}")
    write_json(os.path.join(out, "human_poses.json"), {
        "model_name": "human_default",
        "poses": {"origin": HUMAN_ORIGIN, "pinch": pinch},
    })

    with open(os.path.join(out, "sweep.csv"), "w") as f:
        f.write("time," + ",".join(human_names) + "\n")
        for t, q in sweep(HUMAN_JOINTS, HUMAN_ORIGIN, HUMAN_EXTREMA):
            f.write(repr(t) + "," + ",".join(repr(v) for v in q) + "\n")


if __name__ == "__main__":
    main()
