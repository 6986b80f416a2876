#!/usr/bin/env python3
"""
Autoencoder Feature Learning Experiment - Driver Script
=======================================================

Trains AE, DAE, CAE and CDAE stacks on a balanced MNIST subset, extracts
the middle-layer features and classifies them with a one-vs-one SVM.

    python run_experiment.py reproduce --scale desk     # ~2,000 + 2,000 images
    python run_experiment.py reproduce --scale full     # 9,000 + 9,000, both stacks
    python run_experiment.py gradcheck                  # verify every gradient
    python run_experiment.py report --out runs/desk

Run `python run_experiment.py <command> --help` for every option.
"""

import os
import sys

# Make `src` importable when run from anywhere
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.experiment.cli import main

if __name__ == "__main__":
    sys.exit(main())
