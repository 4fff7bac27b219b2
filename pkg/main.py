"""
Laboratoire de Q-learning fédéré synchrone
Point d'entrée en ligne de commande : python main.py <sous-commande> [options]
"""
import sys

from modules.app import App

if __name__ == '__main__':
	sys.exit(App.run())
