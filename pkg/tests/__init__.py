"""テストコード"""










