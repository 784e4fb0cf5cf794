#!/usr/bin/env python3
"""Writes the bundled problem set (data/sample_problems.json) to stdout."""
import json
import math

SPOTS = [-0.15, 0.0, 0.15]
DIMS = [0.1, 0.05, 0.05]  # height, width, depth; the identity orientation stands a block upright
IDENTITY = [1.0, 0.0, 0.0, 0.0]


def q_y(a):
    return [math.cos(a / 2), 0.0, math.sin(a / 2), 0.0]


def up(b, x, base=0.0):
    return dict(block=b, parent="table", position=[x, 0.0, base + 0.05], orientation=IDENTITY)


def lie(b, x, base=0.0):
    return dict(block=b, parent="table", position=[x, 0.0, base + 0.025], orientation=q_y(math.pi / 2))


def tower(ids, x):
    return [up(b, x, 0.1 * i) for i, b in enumerate(ids)]


def tilted(a):
    # Centre offset of a block rotated by a about y, resting on its lowest edge: horizontal
    # distance from centre to the top corner on the lean side, and centre height.
    return 0.025 * math.cos(a) + 0.05 * math.sin(a), 0.025 * math.sin(a) + 0.05 * math.cos(a)


def tent(left, right, x, degrees=30):
    # Two blocks leaning into each other with their top edges meeting above x. Past 26.6
    # degrees a single leg topples, so both have to be set down together.
    a = math.radians(degrees)
    c, z = tilted(a)
    return [dict(block=left, parent="table", position=[x - c, 0.0, z], orientation=q_y(a)),
            dict(block=right, parent="table", position=[x + c, 0.0, z], orientation=q_y(-a))]


def lean_left_against(b, x_face, degrees=35):
    # Leans toward -x with its top edge on a vertical face at x_face.
    a = math.radians(degrees)
    c, z = tilted(a)
    return dict(block=b, parent="table", position=[x_face + c, 0.0, z], orientation=q_y(-a))


def problems():
    s0, s1, s2 = SPOTS
    return [
        (tower(["b1", "b2", "b3"], s1), tower(["b1", "b2", "b3"], s1)),
        (tower(["b1", "b2", "b3"], s0), tower(["b3", "b2", "b1"], s0)),
        (tower(["b1", "b2", "b3"], s1), [up("b1", s0), up("b2", s1), up("b3", s2)]),
        ([up("b1", s0), up("b2", s1), up("b3", s2)], tower(["b2", "b3", "b1"], s2)),
        ([up("b3", s0), up("b2", s1), up("b1", s2)], [up("b3", s0)] + tent("b1", "b2", s1)),
        ([up("b2", s1), up("b3", s1, 0.1), lean_left_against("b1", s1 + 0.025)],
         [up("b2", s0), up("b3", s2), up("b1", s2, 0.1)]),
        (tower(["b1", "b2"], s0) + [up("b3", s2)], tower(["b3", "b1"], s1) + [up("b2", s0)]),
        ([lie("b1", s1), up("b2", s1, 0.05), up("b3", s2)], [up("b1", s0), lie("b2", s0, 0.1), up("b3", s2)]),
        ([up("b1", s0), lie("b3", s0, 0.1), up("b2", s2)], [up("b1", s0), up("b2", s2), lie("b3", s2, 0.1)]),
        (tower(["b1", "b2"], s0) + tower(["b3"], s2), tower(["b2", "b1", "b3"], s2)),
    ]


def main():
    doc = dict(
        layout=dict(spots=SPOTS, boundary=dict(min=[-0.3, -0.12], max=[0.3, 0.12])),
        blocks=[dict(id=i, color=c, dims=DIMS, mass=0.05) for i, c in [("b1", "red"), ("b2", "yellow"), ("b3", "blue")]],
        problems=[dict(id=i + 1, initial=a, target=b) for i, (a, b) in enumerate(problems())],
    )
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
