#!/usr/bin/env python3
"""Regenerate the benchmark CSVs under data/.

The UCI car, breast-cancer-wisconsin and heart-disease (Cleveland) tables are
taken from the Orange3 3.10.0 source distribution, which bundles them as
tab-separated files. Run with network access to a PyPI mirror:

    python3 scripts/fetch_data.py

Outputs data/cars.csv, data/breast-w.csv and data/heart.csv with binary labels.
"""
import csv
import glob
import os
import subprocess
import sys
import tarfile
import tempfile

ORANGE = "Orange3==3.10.0"
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")


def read_tab(tar, name):
    member = next(m for m in tar.getmembers() if m.name.endswith("Orange/datasets/" + name))
    lines = tar.extractfile(member).read().decode("utf-8").splitlines()
    header = lines[0].split("\t")
    rows = [line.split("\t") for line in lines[3:] if line.strip()]
    return header, rows


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}: {len(rows)} rows")


def cars(tar):
    _, rows = read_tab(tar, "car.tab")
    level = {"v-high": "very_high", "high": "high", "med": "medium", "low": "low"}
    doors = {"2": "2", "3": "3", "4": "4", "5-more": "5_more"}
    trunk = {"small": "small", "med": "medium", "big": "big"}
    out = []
    for buying, maint, door, persons, lug, safety, y in rows:
        label = "unacceptable" if y == "unacc" else "acceptable"
        out.append([level[buying], level[maint], doors[door], persons, trunk[lug], level[safety], label])
    header = ["price", "maintenance", "doors", "persons", "trunk", "safety", "acceptability"]
    write(os.path.join(DATA, "cars.csv"), header, out)


def breast(tar):
    _, rows = read_tab(tar, "breast-cancer-wisconsin.tab")
    header = [
        "clump_thickness", "cell_size_uniformity", "cell_shape_uniformity", "marginal_adhesion",
        "single_epithelial_cell_size", "bare_nuclei", "bland_chromatin", "normal_nucleoli",
        "mitoses", "diagnosis",
    ]
    out = [r[:9] + ["malignant" if r[9] == "4" else "benign"] for r in rows]
    write(os.path.join(DATA, "breast-w.csv"), header, out)


def heart(tar):
    _, rows = read_tab(tar, "heart_disease.tab")
    header = [
        "age", "sex", "chest_pain", "rest_blood_pressure", "cholesterol", "fasting_blood_sugar",
        "rest_ecg", "max_heart_rate", "exercise_angina", "st_depression", "st_slope",
        "major_vessels", "thal", "disease",
    ]
    out = []
    for r in rows:
        cells = [c.strip().replace(" ", "_") if c.strip() != "?" else "" for c in r[:13]]
        out.append(cells + ["present" if r[13] == "1" else "absent"])
    write(os.path.join(DATA, "heart.csv"), header, out)


def main():
    os.makedirs(DATA, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call(
            [sys.executable, "-m", "pip", "download", ORANGE, "--no-deps", "--no-binary", ":all:", "-d", tmp]
        )
        sdist = glob.glob(os.path.join(tmp, "Orange3-*.tar.gz"))[0]
        with tarfile.open(sdist) as tar:
            cars(tar)
            breast(tar)
            heart(tar)


if __name__ == "__main__":
    main()
