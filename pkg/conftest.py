import os
import sys

# packages live at the repository root, next to app.py
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
