"""PFRNet: guidance-driven feature refinement for camouflaged object detection."""
