# Copyright 2026 The relquery Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the synthetic rows of the bundled example datasets.

The cars extract holds only reference rows. The
college and gapminder files keep their reference rows fixed and draw every other
row from a small latent-class model with a fixed seed.
"""

import csv
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.dirname(HERE)


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else v for v in r])


def cars():
    header = ["make", "price", "wheels", "doors", "engine", "horsepower", "body"]
    fixed = [
        ["jaguar", 35550, "rear", "four", 258, 176, "sedan"],
        ["jaguar", 32250, "rear", "four", 258, 176, "sedan"],
        ["mercedes", 40960, "rear", "four", 308, 184, "sedan"],
        ["mercedes", 45400, "rear", "two", 304, 184, "hardtop"],
        ["mercedes", 34184, "rear", "four", 234, 155, "sedan"],
        ["mercedes", 35056, "rear", "two", 234, 155, "convertible"],
        ["bmw", 36880, "rear", "four", 209, 182, "sedan"],
        ["bmw", 41315, "rear", "two", 209, 182, "sedan"],
        ["bmw", 30760, "rear", "four", 209, 182, "sedan"],
        ["jaguar", 36000, "rear", "two", 326, 262, "sedan"],
    ]
    rows = list(fixed)
    write("cars_1987.csv", header, rows)


def colleges(rng):
    header = ["institute", "admit_rate", "median_sat_math", "tuition", "median_student_debt",
              "instructional_invest", "locale"]
    fixed = [
        ["Duke University", 0.11, 745, 47243, 7500, 50756, "Midsize City"],
        ["Princeton University", 0.08, 755, 41820, 7500, 52224, "Large Suburb"],
        ["Harvard University", 0.06, 755, 43938, 6500, 49500, "Midsize City"],
        ["Univ of Chicago", 0.08, 758, 49380, 12500, 83779, "Large City"],
        ["Mass Inst Technology", 0.08, 770, 45016, 14990, 62770, "Midsize City"],
        ["Calif Inst Technology", 0.08, 785, 43362, 11812, 92590, "Midsize City"],
        ["Stanford University", 0.05, 745, 45195, 12782, 93146, "Large Suburb"],
        ["Yale University", 0.06, 750, 45800, 13774, 107982, "Midsize City"],
        ["Columbia University", 0.07, 745, 51008, 23000, 80944, "Large City"],
        ["University of Penn.", 0.104, 735, 47668, 21500, 49018, "Large City"],
        ["Georgetown Univ", 0.17, 710, 46744, 17000, 31102, "Midsize City"],
        ["Johns Hopkins Univ", 0.16, 730, 47060, 16250, 77339, "Midsize City"],
        ["Vanderbilt Univ", 0.13, 760, 43838, 13000, 79372, "Large City"],
        ["Carnegie Mellon", 0.24, 750, 49022, 25250, 31807, "Midsize City"],
        ["Rice University", 0.15, 750, 40566, 9642, 40056, "Midsize City"],
        ["Univ Southern Calif", 0.18, 710, 48280, 21500, 43170, "Midsize City"],
        ["Cooper Union", 0.15, 710, 41400, 18250, 21635, "Large City"],
        ["New York University", 0.35, 685, 46170, 23300, 30237, "Large City"],
    ]
    locales = ["Small City", "Midsize City", "Large Suburb", "Small Town", "Rural Fringe"]
    rows = list(fixed)
    for i in range(22):
        rows.append([
            "Example College %02d" % (i + 1),
            round(float(np.clip(rng.normal(0.65, 0.15), 0.2, 0.98)), 2),
            int(np.clip(rng.normal(560, 45), 420, 690)),
            int(round(np.clip(rng.normal(24000, 9000), 6000, 45000), -1)),
            int(round(np.clip(rng.normal(24000, 4000), 12000, 35000), -1)),
            int(round(np.clip(rng.normal(11000, 3500), 4000, 25000), -1)),
            locales[rng.integers(len(locales))],
        ])
    write("college_scorecard.csv", header, rows)


COUNTRIES = [
    "Algeria", "Argentina", "Austria", "Bangladesh", "Belgium", "Bolivia", "Botswana", "Brazil", "Canada",
    "Chile", "Colombia", "Denmark", "Egypt", "Ethiopia", "Finland", "France", "Germany", "Ghana", "India",
    "Indonesia", "Iran", "Iraq", "Ireland", "Italy", "Japan", "Kenya", "Kuwait", "Mexico", "Morocco",
    "Netherlands", "Nigeria", "Norway", "Oman", "Pakistan", "Poland", "Portugal", "Qatar", "Saudi Arabia",
    "Spain", "Sweden", "Tanzania", "Thailand", "Turkey", "Uganda", "United Kingdom", "Venezuela", "Vietnam",
    "Yemen", "Zambia", "Jordan", "Nepal", "Malaysia", "Philippines",
]


def gapminder(rng):
    header = ["country", "government", "oil", "snow", "hdi", "life expectancy at birth", "gdp per capita",
              "infant mortality"]
    # Worked-example extract; missing cells kept as given. Remaining cells are drawn below.
    fixed = {
        "Australia": {"government": "parliamentary", "oil": 19},
        "Lebanon": {"government": "semi-presidential", "hdi": 145, "snow": 1.3},
        "Swaziland": {"government": "monarchy", "oil": 17, "hdi": 110},
        "United States": {"government": "presidential", "oil": 31, "hdi": 197, "snow": 2.9},
        "China": {"government": "politburo", "oil": 21, "snow": 3.4},
        "Greece": {"government": "parliamentary", "oil": 3, "hdi": 180},
        "Peru": {"government": "presidential", "hdi": 147, "snow": 1.1},
    }
    classes = {
        # hdi, life, gdp, infant, oil, snow, governments
        "rich": ((185, 8), (80, 2), (42000, 9000), (4, 1.5), (8, 6), (2.5, 1.0), ["parliamentary", "presidential"]),
        "oil": ((150, 10), (74, 3), (30000, 12000), (15, 5), (45, 10), (0.2, 0.2), ["monarchy", "presidential"]),
        "mid": ((140, 10), (71, 3), (9000, 3000), (25, 8), (10, 6), (0.8, 0.6),
                ["presidential", "parliamentary", "semi-presidential"]),
        "poor": ((100, 12), (60, 4), (1500, 700), (60, 15), (4, 4), (0.1, 0.1), ["presidential", "military"]),
    }
    assign = {
        "rich": ["Austria", "Belgium", "Canada", "Denmark", "Finland", "France", "Germany", "Ireland", "Italy",
                 "Japan", "Netherlands", "Norway", "Spain", "Sweden", "United Kingdom", "Portugal", "Poland"],
        "oil": ["Algeria", "Iran", "Iraq", "Kuwait", "Oman", "Qatar", "Saudi Arabia", "Venezuela"],
        "mid": ["Argentina", "Bolivia", "Botswana", "Brazil", "Chile", "Colombia", "Egypt", "India", "Indonesia",
                "Jordan", "Malaysia", "Mexico", "Morocco", "Philippines", "Thailand", "Turkey", "Vietnam"],
        "poor": ["Bangladesh", "Ethiopia", "Ghana", "Kenya", "Nepal", "Nigeria", "Pakistan", "Tanzania", "Uganda",
                 "Yemen", "Zambia"],
    }
    fixed_class = {"Australia": "rich", "Lebanon": "mid", "Swaziland": "poor", "United States": "rich",
                   "China": "mid", "Greece": "rich", "Peru": "mid"}
    rows = []
    present_fixed = set()
    names = list(fixed)
    for cls, members in assign.items():
        names += members
    for name in names:
        cls = fixed_class.get(name) or next(c for c, m in assign.items() if name in m)
        hdi, life, gdp, inf, oil, snow, govs = classes[cls]
        row = {
            "government": govs[rng.integers(len(govs))],
            "oil": int(max(0, rng.normal(*oil))),
            "snow": round(float(max(0.0, rng.normal(*snow))), 1),
            "hdi": int(np.clip(rng.normal(*hdi), 60, 200)),
            "life expectancy at birth": round(float(rng.normal(*life)), 1),
            "gdp per capita": int(round(max(400, rng.normal(*gdp)), -1)),
            "infant mortality": round(float(max(1.5, rng.normal(*inf))), 1),
        }
        if name in fixed:
            for col in ("government", "oil", "snow", "hdi"):
                row[col] = fixed[name].get(col)
                if col in fixed[name]:
                    present_fixed.add((name, col))
            # Worked-example rows keep only the given cells among its four columns.
        rows.append([name] + [row[c] for c in header[1:]])

    # Blank cells until exactly 35% of the modeled cells are missing; worked-example
    # cells are never blanked, and every row and column keeps a value.
    total = len(rows) * (len(header) - 1)
    target = int(round(0.35 * total))
    assert target * 100 == 35 * total, "row count must make 35% exact"
    missing = sum(v is None for r in rows for v in r[1:])
    candidates = [(i, j) for i, r in enumerate(rows) for j in range(1, len(header))
                  if r[j] is not None and (r[0], header[j]) not in present_fixed and header[j] != "government"]
    order = rng.permutation(len(candidates))
    for k in order:
        if missing == target:
            break
        i, j = candidates[k]
        if sum(v is not None for v in rows[i][1:]) <= 2:
            continue
        rows[i][j] = None
        missing += 1
    assert missing == target, (missing, target)
    write("gapminder.csv", header, rows)


def main():
    rng = np.random.default_rng(1987)
    cars()
    colleges(rng)
    gapminder(rng)


if __name__ == "__main__":
    main()
