"""
Total transmission from a singles fringe, split over known components.

A singles visibility of 4.41% corresponds to 10 log10(0.0441) dB of loss
between the two sources. The two delay spirals account for most of it.
"""

from nlisim.analysis import loss_budget


def main():
    b = loss_budget(0.0441, {"spiral 1": 6.5, "spiral 2": 6.5})
    print(f"total            {b.total_db:7.2f} dB")
    for name, db in b.components:
        print(f"{name:16s} {db:7.2f} dB")
    print(f"unaccounted      {b.residual_db:7.2f} dB")


if __name__ == "__main__":
    main()
