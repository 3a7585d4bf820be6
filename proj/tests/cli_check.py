"""Drives the lowrank CLI end to end and checks its outputs with generic readers."""
import csv
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

exe, fixtures, work = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
shutil.rmtree(work, ignore_errors=True)
work.mkdir(parents=True)


def run(*args, ok=True):
    p = subprocess.run([exe, *map(str, args)], capture_output=True, text=True)
    if ok and p.returncode != 0:
        sys.exit(f"{args} failed: {p.stderr}")
    if not ok:
        assert p.returncode != 0, f"{args} should fail"
        assert p.stderr.strip(), f"{args} printed no diagnostic"
    return p.stdout


# compress / info / decompress / errormap
out = run("compress", fixtures / "astronaut.png", work / "a.lrif", "--tolerance", "0.1")
assert "ranks" in out
info = dict(line.split(" ", 1) for line in run("info", work / "a.lrif").splitlines())
assert info["channels"] == "3" and int(info["bytes"]) == (work / "a.lrif").stat().st_size
run("decompress", work / "a.lrif", work / "a.png")
err = run("errormap", fixtures / "astronaut.png", work / "a.png", work / "map.pgm")
assert 0 < float(err.split()[1]) <= 0.11
run("compress", fixtures / "gravel.pgm", work / "g.lrif", "--rank", "5")
assert "ranks 5" in run("info", work / "g.lrif")

# failures exit nonzero with a message
run("info", fixtures / "astronaut.png", ok=False)
run("compress", fixtures / "astronaut.png", work / "x.lrif", "--rank", "100000", ok=False)
run("compress", work / "missing.png", work / "x.lrif", "--tolerance", "0.1", ok=False)
run("bench", fixtures, "--config", work / "missing.conf", ok=False)

# sweep prints a records CSV
rows = list(csv.DictReader(run("sweep", fixtures / "brick.png", "--grid", "0.1,0.5", "--mode", "both").splitlines()))
assert len(rows) == 4 and {r["method"] for r in rows} == {"svd-factor", "svd-reencoded"}

# bench on a two-image corpus with a lossless command codec
corpus = work / "corpus"
corpus.mkdir()
for name in ("chelsea.png", "coffee.ppm"):
    shutil.copy(fixtures / name, corpus / name)
(work / "run.conf").write_text(
    "grid = 0.05,0.3,0.6,0.9\n"
    "methods = svd-factor, svd-reencoded, jpeg, copy\n"
    "output_dir = out\n"
    "codec.copy.encode = cp {input} {output}\n"
    "codec.copy.quality = 0..2\n"
)
run("bench", corpus, "--config", work / "run.conf")
out_dir = work / "out"

with open(out_dir / "records.csv", newline="") as f:
    records = list(csv.DictReader(f))
assert len(records) == 2 * 4 * 4, len(records)
for r in records:
    assert r["status"].startswith("ok"), r
    ratio = 1 - int(r["compressed_bytes"]) / int(r["original_bytes"])
    assert abs(float(r["ratio"]) - ratio) <= 1e-12, r
keys = [(r["image_id"], r["method"], float(r["tolerance"])) for r in records]
assert keys == sorted(keys)

with open(out_dir / "curves.csv", newline="") as f:
    curves = list(csv.DictReader(f))
for c in curves:
    mine = [float(r["ratio"]) for r in records if r["method"] == c["method"] and r["tolerance"] == c["tolerance"]]
    assert abs(sum(mine) / len(mine) - float(c["mean_ratio"])) <= 1e-12, c

for svg in out_dir.glob("*.svg"):
    root = ET.parse(svg).getroot()
    lines = root.findall(".//{http://www.w3.org/2000/svg}polyline")
    assert lines, svg
    run("plot", out_dir / "curves.csv", work / "replot.svg")
root = ET.parse(work / "replot.svg").getroot()
assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) == len({c["method"] for c in curves})
print("cli end-to-end ok")
