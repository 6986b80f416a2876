#!/usr/bin/env python3
"""
Autoencoder Feature Learning - Setup Check Script
Run this script to check dependencies, create the working directories and
find the MNIST files before the first experiment
"""

import os
import sys

MNIST_FILES = [
    ("train-images-idx3-ubyte", "training images (60,000 × 28 × 28)"),
    ("train-labels-idx1-ubyte", "training labels"),
]


def check_dependencies():
    """Check if required dependencies are installed"""
    print("🔍 Checking dependencies...")

    required_packages = ['numpy', 'pandas', 'pytest']
    missing_packages = []

    for package in required_packages:
        try:
            __import__(package)
            print(f"   ✅ {package}")
        except ImportError:
            print(f"   ❌ {package} - Missing!")
            missing_packages.append(package)

    if missing_packages:
        print(f"\n⚠️  Missing packages: {', '.join(missing_packages)}")
        print("Install with: pip install -r requirements.txt")
        return False

    print("✅ All dependencies installed!")
    return True


def setup_project_structure():
    """Create necessary directories"""
    print("\n📁 Setting up project structure...")

    for directory in ['data', 'runs']:
        if not os.path.exists(directory):
            os.makedirs(directory)
            print(f"   ✅ Created {directory}/")
        else:
            print(f"   📁 {directory}/ already exists")


def check_mnist():
    """Look for the IDX files (plain or .gz) in data/"""
    print("\n🖼️  Checking MNIST files...")

    found_all = True
    for name, description in MNIST_FILES:
        candidates = [os.path.join("data", name), os.path.join("data", name + ".gz")]
        present = [path for path in candidates if os.path.exists(path)]
        if present:
            print(f"   ✅ {present[0]} - {description}")
        else:
            print(f"   ❌ data/{name}[.gz] not found - {description}")
            found_all = False

    if not found_all:
        print("   💡 Download the training files from the MNIST site into data/,")
        print("      or point CDAE_TRAIN_IMAGES / CDAE_TRAIN_LABELS at them")
    return found_all


def check_gradients():
    """Quick gradient check (two restarts) so a broken build shows up now"""
    print("\n🔬 Quick gradient check...")
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    try:
        from src.training.gradcheck import run_gradcheck
        report = run_gradcheck(restarts=2)
    except Exception as e:
        print(f"   ❌ Gradient check failed to run: {e}")
        return False

    if report.passed:
        print(f"   ✅ {len(report.cases)} checks, worst relative error "
              f"{report.worst.result.max_relative_error:.2e}")
        return True
    print(f"   ❌ Worst relative error {report.worst.result.max_relative_error:.2e} "
          f"in {report.worst.variant}/{report.worst.activation}/{report.worst.loss}")
    return False


def show_commands():
    """Show available experiment commands"""
    print("\n🎯 Available Commands:")
    print("=" * 40)

    commands = [
        ("reproduce --scale desk", "Whole pipeline on 200 + 200 images per digit"),
        ("reproduce --scale full", "Both architectures on 900 + 900 per digit (hours)"),
        ("gradcheck", "Analytic vs numerical gradients, every variant"),
        ("report --out runs/desk", "Accuracy tables for a finished run"),
    ]

    for command, description in commands:
        print(f"   python3 run_experiment.py {command:<24} - {description}")


def main():
    """Main setup function"""
    print("🚀 AUTOENCODER FEATURE LEARNING SETUP")
    print("=" * 40)

    # Check dependencies
    if not check_dependencies():
        print("\n❌ Setup incomplete - install missing dependencies first")
        return

    # Setup project structure
    setup_project_structure()

    # Check data
    if not check_mnist():
        print("\n⚠️  MNIST files missing - only gradcheck and the tests will work")

    if not check_gradients():
        print("\n⚠️  Gradients do not match finite differences - do not trust training results")

    show_commands()

    print(f"\n🎉 SETUP COMPLETE!")
    print("=" * 25)
    print("\n📚 Quick Start:")
    print("   1. Run: python3 run_experiment.py reproduce --scale desk")
    print("   2. Read runs/desk/table.txt")
    print("   3. Run the tests: python3 -m pytest tests/")


if __name__ == "__main__":
    main()
