"""Result writers (CSV, JSON) and SVG figures."""
