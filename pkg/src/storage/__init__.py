"""ボリューム・CSV・レポートの入出力"""
