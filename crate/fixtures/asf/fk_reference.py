"""Independent forward kinematics for cmu_style.asf + walk.amc.

Writes cmu_style_fk.csv: one row per frame and joint with the global
position of the joint (bone start), plus `<bone>_end` rows for leaf bone
tips. Conventions: an Acclaim `axis a b c XYZ` triple and a `dof rx ry rz`
list are both applied in listed order about fixed axes (R = Rz Ry Rx), and
a bone's local rotation is C M C^-1 with C its axis frame.
"""

import csv
import math
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).parent


def axis_matrix(axis, deg):
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def fixed_axes(axes, degs):
    m = np.eye(3)
    for ax, d in zip(axes, degs):
        m = axis_matrix(ax.lower(), d) @ m
    return m


def parse_asf(path):
    bones, hierarchy, section, cur = {}, [], None, None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith(":"):
            section = line[1:].split()[0]
            continue
        tok = line.split()
        if section == "bonedata":
            if tok[0] == "begin":
                cur = {"dof": []}
            elif tok[0] == "end":
                bones[cur["name"]] = cur
            elif tok[0] == "name":
                cur["name"] = tok[1]
            elif tok[0] == "direction":
                d = np.array([float(v) for v in tok[1:4]])
                cur["direction"] = d / np.linalg.norm(d)
            elif tok[0] == "length":
                cur["length"] = float(tok[1])
            elif tok[0] == "axis":
                cur["C"] = fixed_axes(tok[4], [float(v) for v in tok[1:4]])
            elif tok[0] == "dof":
                cur["dof"] = tok[1:]
        elif section == "hierarchy" and tok[0] not in ("begin", "end"):
            hierarchy.append((tok[0], tok[1:]))
    children = {}
    for parent, kids in hierarchy:
        children.setdefault(parent, []).extend(kids)
    return bones, children


def parse_amc(path):
    frames, cur = [], None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(":"):
            continue
        tok = line.split()
        if tok[0].isdigit():
            cur = {}
            frames.append(cur)
        else:
            cur[tok[0]] = [float(v) for v in tok[1:]]
    return frames


def main():
    bones, children = parse_asf(HERE / "cmu_style.asf")
    frames = parse_amc(HERE / "walk.amc")
    rows = []
    for fi, values in enumerate(frames):
        r = values["root"]
        root_pos = np.array(r[:3])
        root_rot = fixed_axes("xyz", r[3:6])
        rows.append((fi, "root", root_pos))

        def visit(name, start, parent_rot):
            b = bones[name]
            rot_dofs = [(d[1], v) for d, v in zip(b["dof"], values.get(name, [])) if d.startswith("r")]
            m = fixed_axes([a for a, _ in rot_dofs], [v for _, v in rot_dofs])
            rot = parent_rot @ b["C"] @ m @ b["C"].T
            rows.append((fi, name, start))
            tip = start + b["length"] * rot @ b["direction"]
            kids = children.get(name, [])
            if not kids:
                rows.append((fi, name + "_end", tip))
            for k in kids:
                visit(k, tip, rot)

        for k in children["root"]:
            visit(k, root_pos, root_rot)
    with open(HERE / "cmu_style_fk.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["frame", "joint", "x", "y", "z"])
        for fi, name, p in rows:
            w.writerow([fi, name] + [repr(float(v)) for v in p])


if __name__ == "__main__":
    main()
