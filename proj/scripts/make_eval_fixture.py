#!/usr/bin/env python3
"""Generate the bundled synthetic evaluation fixture and its golden report.

The report is computed here in plain Python, independently of the C++
library, with the same floating-point operation order so that the checked-in
JSON can be compared byte for byte.

    python3 scripts/make_eval_fixture.py [--out tests/fixtures/eval]
"""

import argparse
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

KAPPA = 0.3
CUTOFF = 0.5
GRID_STEP = 0.05
SEED = 20240917

# (id, sr_method, yes votes of 30, heatmap style)
RECORDS = [
    ("a01", "realesrgan", 27, "noisy"),
    ("a02", "realesrgan", 21, "noisy"),
    ("a03", "supir", 30, "perfect"),
    ("a04", "supir", 15, "noisy"),
    ("a05", "rlfn", 9, "shifted"),
    ("a06", "rlfn", 24, "zero"),
    ("a07", "ldl", 18, "shifted"),
    ("a08", "ldl", 3, "noisy"),
]
W, H = 16, 12


def write_fmap(path, values):
    values = np.asarray(values, dtype="<f4")
    h, w = values.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"FMAP" + struct.pack("<IIII", 1, w, h, 1) + values.tobytes())


def write_png(path, array, mode):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array, mode=mode).save(path)


def blob_mask(rng):
    m = np.zeros((H, W), dtype=bool)
    yy, xx = np.mgrid[0:H, 0:W]
    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.integers(0, W), rng.integers(0, H)
        rx, ry = rng.integers(1, 5), rng.integers(1, 4)
        if rng.random() < 0.5:
            m |= (np.abs(xx - cx) <= rx) & (np.abs(yy - cy) <= ry)
        else:
            m |= (xx - cx) ** 2 * ry**2 + (yy - cy) ** 2 * rx**2 <= rx**2 * ry**2
    m[0, 0] = True  # at least one inside pixel
    m[H - 1, W - 1] = False  # and one outside
    return m


def heatmap(rng, gt, style, p):
    if style == "perfect":
        return np.where(gt, p, 0.0).astype(np.float32)
    if style == "zero":
        return np.zeros((H, W), dtype=np.float32)
    base = gt.astype(np.float64)
    if style == "shifted":
        base = np.roll(base, (1, 2), axis=(0, 1))
    noisy = 0.65 * base + 0.45 * rng.random((H, W))
    return np.clip(noisy, 0.0, 1.0).astype(np.float32)


# ---- independent evaluation oracle ------------------------------------------------------


def grid():
    n = round(1.0 / GRID_STEP)
    return [i / n for i in range(n + 1)]


def counts(heat, gt, t):
    tp = fp = fn = tn = 0
    for v, g in zip(heat, gt):
        pred = float(v) >= t
        if pred and g:
            tp += 1
        elif pred:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def ratio(num, den):
    return num / den if den > 0 else None


def scores(tp, fp, fn):
    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    product = precision * recall if precision is not None and recall is not None else None
    return {
        "precision": precision,
        "recall": recall,
        "precision_x_recall": product,
        "iou": ratio(tp, tp + fp + fn),
    }


def auc(points):
    pts = [(r, p) for r, p in points if r is not None and p is not None]
    if len(pts) < 2:
        return None
    pts.sort(key=lambda rp: rp[0])
    area = 0.0
    for (r0, p0), (r1, p1) in zip(pts, pts[1:]):
        area += (r1 - r0) * (p1 + p0) / 2.0
    return area


def evaluate(items):
    prominent_count = sum(1 for it in items if it["p"] > CUTOFF)
    rows, weighted, binary = [], [], []
    best_f1 = best_f1_t = None
    for t in grid():
        numerator = 0.0
        detected = actual = 0
        ptp = pfp = pfn = 0
        for it in items:
            tp, fp, fn, _ = counts(it["heat"], it["gt"], t)
            numerator += tp * (it["p"] - KAPPA)
            detected += tp + fp
            actual += tp + fn
            if it["p"] > CUTOFF:
                ptp, pfp, pfn = ptp + tp, pfp + fp, pfn + fn
        prec = numerator / detected if detected > 0 else None
        rec = numerator / actual if actual > 0 else None
        f1 = None
        if prec == 0.0 and rec == 0.0:
            f1 = 0.0
        elif prec is not None and rec is not None and prec + rec != 0.0:
            f1 = 2.0 * prec * rec / (prec + rec)
        if prominent_count > 0:
            prominent = scores(ptp, pfp, pfn)
        else:
            prominent = {"precision": None, "recall": None, "precision_x_recall": None, "iou": None}
        rows.append({
            "threshold": t,
            "numerator": numerator,
            "precision_pr": prec,
            "recall_pr": rec,
            "f1": f1,
            "prominent": prominent,
        })
        weighted.append((rec, prec))
        binary.append((prominent["recall"], prominent["precision"]))
        if f1 is not None and (best_f1 is None or f1 > best_f1):
            best_f1, best_f1_t = f1, t
    selected_t, selected, best_product = None, None, 0.0
    for row in rows:
        product = row["prominent"]["precision_x_recall"]
        if product is not None and (selected_t is None or product > best_product):
            best_product, selected_t, selected = product, row["threshold"], row["prominent"]
    return {
        "config": {"kappa": KAPPA, "cutoff": CUTOFF, "grid_step": GRID_STEP},
        "image_count": len(items),
        "prominent_count": prominent_count,
        "pr_auc": auc(weighted),
        "prominent_pr_auc": auc(binary),
        "best_f1": best_f1,
        "best_f1_threshold": best_f1_t,
        "selected_threshold": selected_t,
        "selected": selected,
        "thresholds": rows,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/fixtures/eval")
    out = parser.parse_args().out
    rng = np.random.default_rng(SEED)

    manifest, items = [], []
    for rid, method, yes, style in RECORDS:
        p = yes / 30
        gt = blob_mask(rng)
        lr = (rng.random((H // 2, W // 2, 3)) * 255).astype(np.uint8)
        ref = np.asarray(Image.fromarray(lr, "RGB").resize((W, H), Image.BICUBIC))
        sr = np.clip(ref.astype(np.int16) + rng.integers(-40, 41, ref.shape) * gt[..., None], 0, 255).astype(np.uint8)
        write_png(out / "lr" / f"{rid}.png", lr, "RGB")
        write_png(out / "ref" / f"{rid}.png", ref, "RGB")
        write_png(out / "sr" / f"{rid}.png", sr, "RGB")
        write_png(out / "masks" / f"{rid}.png", gt.astype(np.uint8) * 255, "L")
        write_fmap(out / "neural" / rid / "dists.fmap", np.clip(0.5 * gt + 0.3 * rng.random((H, W)), 0, 1))
        write_fmap(out / "neural" / rid / "lpips.fmap", np.clip(0.4 * gt + 0.4 * rng.random((H, W)), 0, 1))
        heat = heatmap(rng, gt, style, p)
        write_fmap(out / "heatmaps" / f"{rid}.fmap", heat)
        manifest.append({
            "id": rid,
            "sr_method": method,
            "lr_path": f"lr/{rid}.png",
            "sr_path": f"sr/{rid}.png",
            "reference_path": f"ref/{rid}.png",
            "mask_path": f"masks/{rid}.png",
            "prominence": p,
            "votes": {"yes": yes, "total": 30},
        })
        items.append({"p": p, "gt": gt.ravel().tolist(), "heat": heat.ravel().tolist()})

    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    golden = out / "golden" / "report.json"
    golden.parent.mkdir(parents=True, exist_ok=True)
    golden.write_text(json.dumps(evaluate(items), indent=2, sort_keys=True) + "\n")
    print(f"wrote fixture to {out}")


if __name__ == "__main__":
    main()
