#!/usr/bin/env python3
"""Regenerate the bundled sign template library.

Writes one JSON file per sign class under src/augbench/templates/. The
library ships with the package; this script only needs to run when a
template definition changes. Glyphs are deliberately schematic: the point
is a distinct, recognizable pictogram per class, not artwork.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from augbench.sign_renderer import SignTemplate, save_template  # noqa: E402

OUT = ROOT / "src" / "augbench" / "templates"

RED = (0.78, 0.09, 0.12)
BLUE = (0.10, 0.27, 0.68)
WHITE = (0.95, 0.95, 0.95)
INK = (0.08, 0.08, 0.08)
GRAY = (0.55, 0.55, 0.55)


def line(p0, p1, width, color=INK):
    return {"kind": "line", "p0": list(p0), "p1": list(p1), "width": width, "color": list(color)}


def polyline(points, width, color=INK):
    return {"kind": "polyline", "points": [list(p) for p in points], "width": width, "color": list(color)}


def arc(center, radius, width, start=-180.0, end=180.0, color=INK):
    return {
        "kind": "arc", "center": list(center), "radius": radius, "width": width,
        "start_deg": start, "end_deg": end, "color": list(color),
    }


def disc(center, radius, color=INK):
    return {"kind": "disc", "center": list(center), "radius": radius, "color": list(color)}


def digit(char, center, height, color=INK):
    return {"kind": "digit", "char": char, "center": list(center), "height": height, "color": list(color)}


def arrow(p0, p1, width, color=(0.95, 0.95, 0.95)):
    return {"kind": "arrow", "p0": list(p0), "p1": list(p1), "width": width, "color": list(color)}


def digits(text, cy=0.5, height=0.34, color=INK):
    """Center a digit string horizontally around x=0.5."""
    pitch = 0.66 * height
    n = len(text)
    x0 = 0.5 - pitch * (n - 1) / 2.0
    return [digit(ch, (x0 + i * pitch, cy), height, color) for i, ch in enumerate(text)]


def slash(color=INK, width=0.055):
    return line((0.26, 0.74), (0.74, 0.26), width, color)


def person(cx, cy, h, color=INK):
    return [
        disc((cx, cy - 0.36 * h), 0.11 * h, color),
        line((cx, cy - 0.22 * h), (cx, cy + 0.08 * h), 0.16 * h, color),
        line((cx, cy + 0.05 * h), (cx - 0.16 * h, cy + 0.48 * h), 0.10 * h, color),
        line((cx, cy + 0.05 * h), (cx + 0.16 * h, cy + 0.48 * h), 0.10 * h, color),
    ]


def bicycle(cx, cy, h, color=INK):
    r = 0.22 * h
    return [
        arc((cx - 0.28 * h, cy + 0.18 * h), r, 0.07 * h, color=color),
        arc((cx + 0.28 * h, cy + 0.18 * h), r, 0.07 * h, color=color),
        polyline(
            [
                (cx - 0.28 * h, cy + 0.18 * h),
                (cx - 0.05 * h, cy - 0.22 * h),
                (cx + 0.20 * h, cy - 0.22 * h),
                (cx + 0.28 * h, cy + 0.18 * h),
            ],
            0.06 * h,
            color,
        ),
        line((cx - 0.28 * h, cy + 0.18 * h), (cx + 0.1 * h, cy + 0.1 * h), 0.05 * h, color),
    ]


def car(cx, cy, w, color=INK):
    return [
        line((cx - 0.5 * w, cy), (cx + 0.5 * w, cy), 0.36 * w, color),
        line((cx - 0.22 * w, cy - 0.3 * w), (cx + 0.22 * w, cy - 0.3 * w), 0.26 * w, color),
        disc((cx - 0.28 * w, cy + 0.2 * w), 0.1 * w, color),
        disc((cx + 0.28 * w, cy + 0.2 * w), 0.1 * w, color),
    ]


def speed_limit(cls, value, name):
    return SignTemplate("circle", cls, RED, WHITE, tuple(digits(value)), name)


def end_limit(cls, value, name):
    prims = digits(value, color=GRAY) + [slash(GRAY)]
    return SignTemplate("circle", cls, WHITE, WHITE, tuple(prims), name)


def mandatory(cls, prims, name):
    return SignTemplate("circle", cls, WHITE, BLUE, tuple(prims), name)


def prohibition(cls, prims, name):
    return SignTemplate("circle", cls, RED, WHITE, tuple(prims), name)


def warning(cls, prims, name):
    return SignTemplate("triangle", cls, RED, WHITE, tuple(prims), name)


def circular_templates():
    t = []
    t.append(speed_limit(0, "50", "speed_limit_50"))
    t.append(speed_limit(1, "60", "speed_limit_60"))
    t.append(speed_limit(2, "70", "speed_limit_70"))
    t.append(speed_limit(3, "80", "speed_limit_80"))
    t.append(mandatory(4, [arrow((0.24, 0.5), (0.76, 0.5), 0.10)], "direction_right"))
    t.append(
        prohibition(
            5,
            car(0.34, 0.5, 0.26, RED) + car(0.66, 0.5, 0.26, INK),
            "no_passing",
        )
    )
    t.append(
        SignTemplate(
            "circle", 6, WHITE, WHITE,
            tuple(car(0.34, 0.5, 0.26, GRAY) + car(0.66, 0.5, 0.26, GRAY) + [slash(GRAY)]),
            "end_no_passing_trucks",
        )
    )
    t.append(end_limit(7, "30", "end_speed_limit_30"))
    t.append(end_limit(8, "70", "end_speed_limit_70"))
    t.append(end_limit(9, "80", "end_speed_limit_80"))
    t.append(speed_limit(10, "100", "speed_limit_100"))
    t.append(speed_limit(11, "120", "speed_limit_120"))
    t.append(
        SignTemplate(
            "circle", 12, RED, RED,
            (line((0.24, 0.5), (0.76, 0.5), 0.16, WHITE),),
            "no_entry",
        )
    )
    t.append(prohibition(13, [], "no_vehicles"))
    t.append(mandatory(14, [arrow((0.76, 0.5), (0.24, 0.5), 0.10)], "direction_left"))
    t.append(
        mandatory(
            15,
            [
                polyline([(0.58, 0.74), (0.58, 0.46), (0.38, 0.46)], 0.10, WHITE),
                arrow((0.46, 0.46), (0.26, 0.46), 0.10),
            ],
            "turn_left_ahead",
        )
    )
    t.append(mandatory(16, [arrow((0.5, 0.76), (0.5, 0.24), 0.10)], "straight_ahead"))
    t.append(
        mandatory(
            17,
            [arrow((0.38, 0.76), (0.38, 0.26), 0.09), arrow((0.52, 0.62), (0.76, 0.38), 0.09)],
            "straight_or_right",
        )
    )
    t.append(mandatory(18, [arrow((0.32, 0.3), (0.68, 0.66), 0.10)], "keep_right"))
    t.append(mandatory(19, [arrow((0.68, 0.3), (0.32, 0.66), 0.10)], "keep_left"))
    t.append(prohibition(20, car(0.5, 0.5, 0.34, INK), "no_trucks"))
    t.append(
        SignTemplate(
            "circle", 21, RED, BLUE,
            (line((0.26, 0.26), (0.74, 0.74), 0.07, RED), line((0.74, 0.26), (0.26, 0.74), 0.07, RED)),
            "no_stopping",
        )
    )
    t.append(mandatory(22, [arrow((0.66, 0.28), (0.3, 0.64), 0.10)], "pass_left"))
    t.append(
        SignTemplate(
            "circle", 23, RED, BLUE,
            (line((0.74, 0.26), (0.26, 0.74), 0.07, RED),),
            "no_parking",
        )
    )
    t.append(
        SignTemplate(
            "circle", 24, WHITE, WHITE,
            (slash(GRAY, 0.08), line((0.35, 0.77), (0.77, 0.35), 0.03, GRAY)),
            "end_all_restrictions",
        )
    )
    t.append(speed_limit(25, "20", "speed_limit_20"))
    t.append(speed_limit(26, "30", "speed_limit_30"))
    t.append(speed_limit(27, "40", "speed_limit_40"))
    t.append(speed_limit(28, "90", "speed_limit_90"))
    t.append(speed_limit(29, "110", "speed_limit_110"))
    t.append(
        prohibition(
            30,
            car(0.34, 0.48, 0.24, RED) + car(0.66, 0.48, 0.24, INK) + [
                line((0.3, 0.68), (0.7, 0.68), 0.05, INK)
            ],
            "no_passing_trucks",
        )
    )
    t.append(mandatory(31, digits("30", cy=0.5, height=0.3, color=(0.95, 0.95, 0.95)), "minimum_speed_30"))
    t.append(
        mandatory(
            32,
            digits("30", cy=0.5, height=0.3, color=(0.95, 0.95, 0.95)) + [slash(RED, 0.06)],
            "end_minimum_speed_30",
        )
    )
    t.append(prohibition(33, bicycle(0.5, 0.5, 0.52), "no_bicycles"))
    t.append(prohibition(34, person(0.5, 0.48, 0.56), "no_pedestrians"))
    t.append(
        mandatory(
            35,
            person(0.34, 0.46, 0.4, (0.95, 0.95, 0.95))
            + bicycle(0.62, 0.6, 0.34, (0.95, 0.95, 0.95))
            + [line((0.5, 0.24), (0.5, 0.76), 0.025, (0.95, 0.95, 0.95))],
            "shared_path",
        )
    )
    return t


def triangular_templates():
    t = []
    t.append(warning(0, bicycle(0.5, 0.62, 0.4), "bicycle_crossing"))
    t.append(
        warning(
            1,
            [
                polyline([(0.36, 0.84), (0.42, 0.62), (0.42, 0.44)], 0.05),
                polyline([(0.64, 0.84), (0.58, 0.62), (0.58, 0.44)], 0.05),
            ],
            "road_narrows",
        )
    )
    t.append(warning(2, person(0.5, 0.6, 0.44), "pedestrian_crossing"))
    t.append(warning(3, person(0.42, 0.62, 0.34) + person(0.6, 0.64, 0.28), "children"))
    t.append(
        warning(
            4,
            [
                line((0.3, 0.6), (0.62, 0.6), 0.14),
                disc((0.66, 0.52), 0.07),
                line((0.36, 0.64), (0.36, 0.8), 0.06),
                line((0.56, 0.64), (0.56, 0.8), 0.06),
            ],
            "animal_crossing",
        )
    )
    t.append(
        warning(
            5,
            [
                polyline([(0.32, 0.82), (0.40, 0.72), (0.32, 0.62), (0.40, 0.52)], 0.045),
                polyline([(0.56, 0.82), (0.64, 0.72), (0.56, 0.62), (0.64, 0.52)], 0.045),
            ],
            "slippery_road",
        )
    )
    t.append(
        warning(
            6,
            [arc((0.4, 0.76), 0.08, 0.05, -180.0, 0.0), arc((0.6, 0.76), 0.08, 0.05, -180.0, 0.0)],
            "bumpy_road",
        )
    )
    t.append(
        warning(
            7,
            [polyline([(0.44, 0.82), (0.44, 0.6), (0.58, 0.52)], 0.06), arrow((0.5, 0.565), (0.62, 0.5), 0.06, INK)],
            "curve_right",
        )
    )
    t.append(
        warning(
            8,
            [
                polyline([(0.58, 0.82), (0.58, 0.44)], 0.055),
                polyline([(0.38, 0.82), (0.38, 0.68), (0.58, 0.56)], 0.055),
            ],
            "lane_merge",
        )
    )
    t.append(
        warning(
            9,
            [polyline([(0.56, 0.82), (0.56, 0.6), (0.42, 0.52)], 0.06), arrow((0.5, 0.565), (0.38, 0.5), 0.06, INK)],
            "curve_left",
        )
    )
    t.append(
        warning(
            10,
            [polyline([(0.5, 0.84), (0.4, 0.72), (0.6, 0.58), (0.5, 0.46)], 0.055)],
            "double_curve",
        )
    )
    t.append(
        warning(
            11,
            car(0.42, 0.72, 0.2) + car(0.58, 0.52, 0.2),
            "traffic_jam",
        )
    )
    t.append(
        warning(
            12,
            [line((0.5, 0.42), (0.5, 0.84), 0.06), line((0.32, 0.63), (0.68, 0.63), 0.06)],
            "crossroads",
        )
    )
    t.append(
        warning(
            13,
            [polyline([(0.5, 0.48), (0.34, 0.78), (0.66, 0.78), (0.5, 0.48)], 0.045)],
            "yield_ahead",
        )
    )
    t.append(
        warning(
            14,
            [arrow((0.42, 0.82), (0.42, 0.46), 0.06, INK), arrow((0.58, 0.46), (0.58, 0.82), 0.06, INK)],
            "two_way_traffic",
        )
    )
    t.append(
        warning(
            15,
            [
                disc((0.5, 0.5), 0.05, RED),
                disc((0.5, 0.63), 0.05, (0.85, 0.65, 0.1)),
                disc((0.5, 0.76), 0.05, (0.1, 0.5, 0.2)),
            ],
            "traffic_signals",
        )
    )
    return t


def novel_templates():
    """Probe signs outside both training families."""
    t = []
    t.append(
        SignTemplate(
            "circle", 0, RED, WHITE,
            (
                line((0.28, 0.5), (0.72, 0.5), 0.11, RED),
                disc((0.36, 0.34), 0.045, INK),
                disc((0.5, 0.34), 0.045, INK),
                disc((0.64, 0.34), 0.045, INK),
                disc((0.5, 0.66), 0.045, INK),
            ),
            "customs_station",
        )
    )
    t.append(
        SignTemplate(
            "circle", 1, WHITE, BLUE,
            (
                arc((0.5, 0.5), 0.17, 0.07, -150.0, -30.0, (0.95, 0.95, 0.95)),
                arc((0.5, 0.5), 0.17, 0.07, -30.0, 90.0, (0.95, 0.95, 0.95)),
                arc((0.5, 0.5), 0.17, 0.07, 90.0, 210.0, (0.95, 0.95, 0.95)),
                arrow((0.67, 0.56), (0.63, 0.38), 0.055),
                arrow((0.42, 0.32), (0.26, 0.44), 0.055),
                arrow((0.41, 0.66), (0.61, 0.7), 0.055),
            ),
            "roundabout",
        )
    )
    t.append(end_limit(2, "40", "end_speed_limit_40"))
    return t


def main():
    groups = {
        "circular": circular_templates(),
        "triangular": triangular_templates(),
        "novel": novel_templates(),
    }
    for family, templates in groups.items():
        folder = OUT / family
        folder.mkdir(parents=True, exist_ok=True)
        for old in folder.glob("*.json"):
            old.unlink()
        for template in templates:
            path = folder / f"class_{template.class_index:02d}_{template.name}.json"
            save_template(template, family, path)
        print(f"{family}: wrote {len(templates)} templates")


if __name__ == "__main__":
    main()
