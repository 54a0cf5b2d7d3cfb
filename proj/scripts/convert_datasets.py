#!/usr/bin/env python3
"""Converts public sentence-pair corpora to the three-column TSV that mmax reads.

  sentence1 TAB sentence2 TAB gold

Supported inputs:
  stsb   sts-{train,dev,test}.csv from the STS Benchmark (score in column 5)
  sick   SICK_{train,trial,test_annotated}.txt or SICK.txt (header row with
         sentence_A, sentence_B, relatedness_score, entailment_judgment)
  mrpc   msr_paraphrase_{train,test}.txt (header row, Quality first)

For SICK, --target picks relatedness (sts task) or entailment labels.
"""
import argparse
import csv
import pathlib
import sys


def clean(s):
    return " ".join(s.replace("\t", " ").split())


def stsb(path):
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            cols = line.rstrip("\n").split("\t")
            if len(cols) < 7:
                print(f"{path}:{n}: skipped, {len(cols)} columns", file=sys.stderr)
                continue
            yield clean(cols[5]), clean(cols[6]), cols[4]


def sick(path, target):
    with open(path, encoding="utf-8") as f:
        rows = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        for row in rows:
            gold = row["relatedness_score"] if target == "relatedness" else row["entailment_judgment"].lower()
            yield clean(row["sentence_A"]), clean(row["sentence_B"]), gold


def mrpc(path):
    with open(path, encoding="utf-8-sig") as f:
        next(f)
        for n, line in enumerate(f, 2):
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 5:
                print(f"{path}:{n}: skipped, {len(cols)} columns", file=sys.stderr)
                continue
            yield clean(cols[3]), clean(cols[4]), cols[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("format", choices=["stsb", "sick", "mrpc"])
    ap.add_argument("input", type=pathlib.Path)
    ap.add_argument("output", type=pathlib.Path)
    ap.add_argument("--target", choices=["relatedness", "entailment"], default="relatedness")
    args = ap.parse_args()

    if args.format == "stsb":
        pairs = stsb(args.input)
    elif args.format == "sick":
        pairs = sick(args.input, args.target)
    else:
        pairs = mrpc(args.input)

    count = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for s1, s2, gold in pairs:
            if s1 and s2:
                out.write(f"{s1}\t{s2}\t{gold}\n")
                count += 1
    print(f"wrote {count} pairs to {args.output}", file=sys.stderr)


if __name__ == "__main__":
    main()
