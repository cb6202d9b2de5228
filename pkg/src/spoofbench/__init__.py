"""Voice anti-spoofing countermeasures: MFCC/CQCC front-ends, GMM-ML scoring, ROCCH-EER."""

__version__ = "0.1.0"
