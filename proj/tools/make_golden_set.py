#!/usr/bin/env python3
"""Writes data/golden/golden_set.jsonl and renders one PNG per problem.

References are computed here with sympy and fractions, independently of the
C++ oracle, so the two can be checked against each other.
"""

import argparse
import json
import math
import pathlib
import re
from fractions import Fraction

import sympy
from PIL import Image, ImageDraw, ImageFont

LINEAR = [
    "Solve 2x + 4 = 10",
    "Solve for x: 5x - 7 = 18",
    "Find y if 3y + 8 = 2.",
    "Solve 7 - 2x = 1",
    "Solve 4x = 6",
    "Solve 3(x - 2) = 12",
    "Solve x/4 + 1 = 3",
    "Solve 6x + 5 = 2x + 17",
    "Solve for n: 9n - 4 = 32",
    "Solve 0.5x + 2 = 7",
    "Solve -3x + 11 = -4",
    "Solve 2(3x + 1) = 5x + 9",
]

QUADRATIC = [
    "Solve x^2 - 5x + 6 = 0",
    "Solve x^2 + x - 12 = 0",
    "Find all real solutions of x^2 - 9 = 0.",
    "Solve 2x^2 - 7x + 3 = 0",
    "Solve x^2 - 2x - 1 = 0",
    "Solve x^2 + 6x + 9 = 0",
    "Solve x^2 = 4x + 21",
    "Solve 3x^2 + 2x - 8 = 0",
    "Solve x^2 - 4x + 1 = 0",
    "Solve x^2 + 2x - 15 = 0",
    "Solve the quadratic equation x^2 - 10x + 24 = 0.",
    "Solve x(x - 3) = 10",
]

COORDINATE = [
    "Find the midpoint of the segment joining (1, 2) and (5, -4).",
    "What is the midpoint of the points (-3, 7) and (5, 1)?",
    "Find the midpoint of the segment from (0, 0) to (7, 3).",
    "Find the midpoint between (2, -6) and (-4, 2).",
    "Find the distance between the points (1, 2) and (4, 6).",
    "What is the distance between (-2, 3) and (4, -5)?",
    "Find the distance between the points (0, 0) and (2, 4).",
    "Find the distance from (1, 1) to (4, 2).",
    "Find the slope of the line through (1, 1) and (3, 4).",
    "What is the slope of the line passing through (-2, 5) and (2, -3)?",
    "Find the slope of the line through (0, 4) and (6, 4).",
    "Find the slope of the line joining (1, -1) and (4, 8).",
]

FACTORIAL = [
    "Compute 5!",
    "Compute 7!",
    "What is 6!?",
    "Evaluate 8!/6!.",
    "What is the factorial of 4?",
    "Evaluate 10!/7!",
    "Compute 0!",
    "Compute 9!",
    "Evaluate 3! + 4!.",
    "Compute 12!/(10! * 2!)",
    "Compute 5! - 3!",
]

FACTORIAL_WORD = ["What is the factorial of 8?"]

TRIANGLE = [
    "A triangle has angles of 30°, 60° and 90°. Classify the triangle by its angles.",
    "A triangle has angles of 50°, 60° and 70°. Classify the triangle by its angles.",
    "A triangle has angles of 20°, 40° and 120°. Classify the triangle by its angles.",
    "Two angles of a triangle measure 45° and 45°. Classify the triangle by its angles.",
    "Two angles of a triangle measure 35° and 40°. Classify the triangle by its angles.",
    "Two angles of a triangle measure 55° and 65°. Classify the triangle by its angles.",
    "A triangle has angles measuring 90, 25 and 65 degrees. Classify it by its angles.",
    "A triangle has angles of 100°, 50° and 30°. Classify the triangle by its angles.",
    "Two angles of a triangle are 80° and 70°. Classify the triangle by its angles.",
    "Two angles of a triangle are 62° and 28°. Classify the triangle by its angles.",
    "A triangle has angles of 15°, 25° and 140°. Classify the triangle by its angles.",
]

TRIG = [
    "Find the exact value of sin(30°).",
    "Find the exact value of cos(60°).",
    "Find the exact value of tan(45°).",
    "Find the exact value of sin(45°).",
    "Find the exact value of cos(30°).",
    "Evaluate tan(60°) exactly.",
    "Evaluate sin(150°) exactly.",
    "Find the exact value of cos(120°).",
    "Find the exact value of tan(135°).",
    "Evaluate sin(270°) exactly.",
    "Find the exact value of tan(30°).",
]

X = sympy.Symbol("x")


def to_sympy(text):
    text = text.replace("^", "**")
    text = re.sub(r"(\d)\s*([a-z(])", r"\1*\2", text)
    text = re.sub(r"([a-z])\s*\(", r"\1*(", text)
    return sympy.sympify(text, rational=True)


def fmt(value):
    value = sympy.nsimplify(value)
    return str(value).replace("**", "^")


def equation_of(statement):
    m = re.search(r"([-\w().+*/ ^]*?)=([-\w().+*/ ^]*)", statement)
    lhs, rhs = m.group(1), m.group(2).rstrip(". ")
    lhs = re.split(r"\b[A-Za-z]{2,}\b", lhs)[-1]
    lhs = lhs.split(":")[-1].strip()
    expr = to_sympy(lhs) - to_sympy(rhs)
    (var,) = expr.free_symbols
    return expr, var


def linear_ref(statement):
    expr, var = equation_of(statement)
    (root,) = sympy.solve(expr, var)
    return fmt(root)


def quadratic_ref(statement):
    expr, var = equation_of(statement)
    roots = sorted(set(sympy.solve(expr, var)), key=lambda r: float(r))
    return "{" + ", ".join(fmt(r) for r in roots) + "}"


def coordinate_ref(statement):
    pts = [(Fraction(a), Fraction(b)) for a, b in re.findall(r"\((-?\d+), (-?\d+)\)", statement)]
    (x1, y1), (x2, y2) = pts
    lower = statement.lower()
    if "midpoint" in lower:
        return f"({fmt(sympy.Rational((x1 + x2) / 2))}, {fmt(sympy.Rational((y1 + y2) / 2))})"
    if "distance" in lower:
        return fmt(sympy.sqrt(sympy.Rational((x2 - x1) ** 2 + (y2 - y1) ** 2)))
    return fmt(sympy.Rational((y2 - y1) / (x2 - x1)))


def factorial_ref(statement):
    m = re.search(r"factorial of (\d+)", statement)
    if m:
        return str(math.factorial(int(m.group(1))))
    expr = re.search(r"[\d!()+\-*/ ]+!\)?", statement.split(" ", 1)[1]).group(0)
    expr = re.sub(r"(\d+)!", r"factorial(\1)", expr)
    value = sympy.sympify(expr)
    return fmt(value)


def triangle_ref(statement):
    angles = [int(a) for a in re.findall(r"\d+", statement)]
    if len(angles) == 2:
        angles.append(180 - sum(angles))
    assert sum(angles) == 180 and min(angles) > 0
    top = max(angles)
    return "right" if top == 90 else ("obtuse" if top > 90 else "acute")


def trig_ref(statement):
    fn, deg = re.search(r"(sin|cos|tan)\((-?\d+)", statement).groups()
    value = getattr(sympy, fn)(sympy.pi * int(deg) / 180)
    return fmt(sympy.radsimp(value))


CATEGORIES = [
    ("linear_equation", "lin", LINEAR, linear_ref),
    ("quadratic_equation", "quad", QUADRATIC, quadratic_ref),
    ("coordinate_geometry", "coord", COORDINATE, coordinate_ref),
    ("factorial", "fact", FACTORIAL + FACTORIAL_WORD, factorial_ref),
    ("triangle_by_angles", "tri", TRIANGLE, triangle_ref),
    ("trigonometry", "trig", TRIG, trig_ref),
]


def render(statement, path):
    try:
        font = ImageFont.truetype("DejaVuSans.ttf", 22)
    except OSError:
        font = ImageFont.load_default()
    probe = ImageDraw.Draw(Image.new("RGB", (1, 1)))
    left, top, right, bottom = probe.textbbox((0, 0), statement, font=font)
    width, height = right - left + 48, bottom - top + 48
    image = Image.new("RGB", (width, height), "white")
    ImageDraw.Draw(image).text((24 - left, 24 - top), statement, fill="black", font=font)
    image.save(path, format="PNG", optimize=False)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    root = pathlib.Path(__file__).resolve().parent.parent
    parser.add_argument("--out", type=pathlib.Path, default=root / "data" / "golden")
    args = parser.parse_args()
    images = args.out / "images"
    images.mkdir(parents=True, exist_ok=True)
    lines = []
    for category, prefix, statements, solve in CATEGORIES:
        for i, statement in enumerate(statements, start=1):
            pid = f"{prefix}-{i:02d}"
            image = f"images/{pid}.png"
            render(statement, args.out / image)
            record = {
                "id": pid,
                "category": category,
                "statement": statement,
                "image_path": image,
                "reference": solve(statement),
            }
            lines.append(json.dumps(record, ensure_ascii=False))
    (args.out / "golden_set.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} problems to {args.out}")


if __name__ == "__main__":
    main()
