"""Extended-precision soft descriptor for the pinned 8x4 fixture.

Re-derives the descriptor from the definition with mpmath at 60 digits:
unit-normalize each row, take cosines with the anchors, softmax of
scale * cosine, then average the per-row distributions. The anchors are
the library's seed-7 draw (4 dims, 10 anchors), copied verbatim.
Writes fixtures/soft_oracle_8x4.json with the rows, the anchors and the
oracle probabilities (20 significant digits).
"""
import json
import pathlib

import mpmath as mp

mp.mp.dps = 60

SCALE = 100
ROWS = [
    [0.5, -1.25, 2.0, 0.75],
    [-3.0, 0.125, 1.5, -0.5],
    [1.0, 1.0, 1.0, 1.0],
    [-0.2, -0.9, 0.4, 0.1],
    [2.5, -0.3, -1.7, 0.9],
    [0.05, 0.6, -0.45, -0.2],
    [-1.1, -1.6, -0.4, -1.2],
    [0.3, -2.2, 0.0, 0.35],
]
ANCHORS = [
    [-0.4182904680750627, -0.7463155345409962, 0.47997413772515946, 0.1940902736752202],
    [0.1744183330617545, -0.3778871724187217, -0.6565370452671275, 0.6290776090477644],
    [-0.1416111821582598, 0.8214742200711503, -0.5358625295956772, -0.13408105094142628],
    [0.2681474582496694, -0.8543614678045334, -0.33867967653518405, 0.28889357844567637],
    [-0.476126027562335, -0.6882418991029955, -0.27292537629994684, -0.47448796946639765],
    [-0.14142743595740712, 0.4148934685137928, -0.6747978966178855, -0.5937250953624795],
    [-0.3765983815343057, -0.025843516167683236, 0.40413128757878586, -0.8331768564343017],
    [-0.6076774408756059, 0.7314521577533275, 0.2937204470467952, -0.09712964406146347],
    [0.2775405896309906, -0.9583273895120943, -0.021408275032867633, 0.06419907614860242],
    [-0.5477492139099689, -0.8230504225634449, 0.11797173388346725, -0.09295951045306937],
]


def unit(v):
    v = [mp.mpf(x) for x in v]
    n = mp.sqrt(mp.fsum(x * x for x in v))
    return [x / n for x in v]


anchors = [unit(a) for a in ANCHORS]
totals = [mp.mpf(0)] * len(anchors)
for row in ROWS:
    y = unit(row)
    logits = [SCALE * mp.fsum(a * b for a, b in zip(y, anc)) for anc in anchors]
    top = max(logits)
    weights = [mp.exp(l - top) for l in logits]
    z = mp.fsum(weights)
    totals = [t + w / z for t, w in zip(totals, weights)]
probs = [float(mp.nstr(t / len(ROWS), 20)) for t in totals]
out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "soft_oracle_8x4.json"
doc = {"seed": 7, "anchors": 10, "scale": SCALE, "rows": ROWS, "anchor_points": ANCHORS, "oracle": probs}
out.write_text(json.dumps(doc, indent=2) + "\n")
print(out)
