"""Solvers, characteristic function, spectrum labelling, quadrature, asymptotics and trace."""
