"""Print the operation-count table and the ratio against the reference method."""
import argparse

from irs_cellfree.complexity import ComplexityInputs, complexity_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    for name, value in vars(ComplexityInputs()).items():
        parser.add_argument("--" + name.replace("_", "-"), type=int, default=value)
    args = parser.parse_args()
    rep = complexity_report(ComplexityInputs(**vars(args)))
    print("\n".join(rep.lines()))


if __name__ == "__main__":
    main()
